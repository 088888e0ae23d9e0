#include <algorithm>

#include "antic/error.hpp"
#include "antic/predictors.hpp"

namespace antic {

namespace {

std::string lag_column(int lag) { return lag == 0 ? "w_t" : "w_t-" + std::to_string(lag); }

std::string section(std::string_view name, Alpha a) { return std::string(name) + "[" + a.to_string() + "]"; }

ExperimentPair make_pair(std::string group, std::string column, TermList target, TermList baseline) {
    ExperimentPair p;
    p.label = group + " " + column;
    p.group = std::move(group);
    p.column = std::move(column);
    p.target = std::move(target);
    p.baseline = std::move(baseline);
    return p;
}

// Table 1 shape: full surprisal model vs. one surprisal term removed.
std::vector<ExperimentPair> surprisal_pairs() {
    std::vector<ExperimentPair> out;
    const auto full = concat(common_terms(), surprisal_terms());
    for (int lag = kMaxLag; lag >= 0; --lag)
        out.push_back(make_pair("surprisal", lag_column(lag), full, concat(common_terms(), surprisal_terms_except(lag))));
    return out;
}

std::vector<ExperimentPair> replace_pairs(Alpha a) {
    std::vector<ExperimentPair> out;
    const auto base = concat(common_terms(), surprisal_terms());
    for (int lag = kMaxLag; lag >= 0; --lag) {
        auto target = concat(concat(common_terms(), surprisal_terms_except(lag)), {Term::entropy(a, lag)});
        out.push_back(make_pair(section("replace", a), lag_column(lag), std::move(target), base));
    }
    return out;
}

std::vector<ExperimentPair> add_pairs(Alpha a) {
    std::vector<ExperimentPair> out;
    const auto base = concat(common_terms(), surprisal_terms());
    for (int lag = kMaxLag; lag >= 0; --lag)
        out.push_back(make_pair(section("add", a), lag_column(lag), concat(base, {Term::entropy(a, lag)}), base));
    return out;
}

// Table 4 shape: rows are baselines, columns are targets.
std::vector<ExperimentPair> skip_pairs(Alpha a) {
    const auto shared = concat(common_terms(), surprisal_terms_except(0));
    const TermList none{};
    const TermList h{Term::surprisal(0)};
    const TermList ent{Term::entropy(a, 0)};
    const TermList both{Term::surprisal(0), Term::entropy(a, 0)};
    struct Cell {
        const char* row;
        const TermList* base;
        const char* col;
        const TermList* target;
    };
    const Cell cells[] = {
        {"none", &none, "h_t", &h},     {"none", &none, "H_t", &ent}, {"none", &none, "Both", &both},
        {"h_t", &h, "H_t", &ent},       {"h_t", &h, "Both", &both},   {"H_t", &ent, "Both", &both},
    };
    std::vector<ExperimentPair> out;
    for (const auto& c : cells) {
        out.push_back(make_pair(section(std::string("skip base=") + c.row, a), c.col, concat(shared, *c.target),
                                concat(shared, *c.base)));
    }
    return out;
}

// Table 5 shape: budgeting terms over a baseline that already has H(W_t).
std::vector<ExperimentPair> budget_pairs(Alpha a) {
    const auto base = concat(concat(common_terms(), surprisal_terms()), {Term::entropy(a, 0)});
    const std::pair<TermKind, const char*> kinds[] = {
        {TermKind::delta_budget, "delta"},
        {TermKind::over_budget, "over"},
        {TermKind::under_budget, "under"},
        {TermKind::abs_budget, "abs"},
    };
    std::vector<ExperimentPair> out;
    for (const auto& [kind, name] : kinds) {
        for (int lag = kMaxLag; lag >= 1; --lag) {
            out.push_back(make_pair(section(std::string(name) + "-budget", a), lag_column(lag),
                                    concat(base, {Term::budget(kind, a, lag)}), base));
        }
    }
    return out;
}

// Table 6 shape: current-word vs successor entropy over four baselines.
std::vector<ExperimentPair> successor_pairs(Alpha a) {
    const auto base = concat(common_terms(), surprisal_terms());
    const Term current = Term::entropy(a, 0);
    const Term next = Term::successor_entropy(a);
    return {
        make_pair(section("entropy", a), "none", concat(base, {current}), base),
        make_pair(section("entropy", a), "+H(W_t+1)", concat(base, {next, current}), concat(base, {next})),
        make_pair(section("successor", a), "none", concat(base, {next}), base),
        make_pair(section("successor", a), "+H(W_t)", concat(base, {current, next}), concat(base, {current})),
    };
}

std::vector<Alpha> pick(std::optional<Alpha> alpha, std::vector<Alpha> defaults) {
    if (alpha) return {*alpha};
    return defaults;
}

}  // namespace

Experiment experiment_pairs(std::string_view id, std::optional<Alpha> alpha) {
    Experiment e;
    e.id = std::string(id);
    const Alpha shannon = Alpha::shannon();
    const Alpha half(0.5);

    if (id == "exp1") {
        if (alpha) throw ConfigError("exp1 takes no alpha");
        e.pairs = surprisal_pairs();
        return e;
    }
    if (id == "exp2" || id == "exp2-add" || id == "exp2-replace" || id == "exp3" || id == "exp3-add" ||
        id == "exp3-replace") {
        const Alpha a = alpha.value_or(id.starts_with("exp2") ? shannon : half);
        e.alphas = {a};
        const bool add = !id.ends_with("-replace");
        const bool replace = !id.ends_with("-add");
        if (replace) e.pairs = replace_pairs(a);
        if (add) {
            auto more = add_pairs(a);
            e.pairs.insert(e.pairs.end(), more.begin(), more.end());
        }
        return e;
    }

    using Builder = std::vector<ExperimentPair> (*)(Alpha);
    Builder builder = nullptr;
    if (id == "exp4") {
        builder = skip_pairs;
        e.model = ModelKind::logistic;
        e.response = Response::skip_ratio;
    } else if (id == "exp5") {
        builder = budget_pairs;
    } else if (id == "exp6") {
        builder = successor_pairs;
    } else {
        throw ConfigError("unknown experiment '" + std::string(id) + "'");
    }
    e.alphas = pick(alpha, {shannon, half});
    for (auto a : e.alphas) {
        auto more = builder(a);
        e.pairs.insert(e.pairs.end(), more.begin(), more.end());
    }
    return e;
}

Experiment parse_experiment(std::string_view spec) {
    auto colon = spec.find(':');
    if (colon == std::string_view::npos) return experiment_pairs(spec);
    return experiment_pairs(spec.substr(0, colon), Alpha::parse(spec.substr(colon + 1)));
}

std::vector<ExperimentPair> alpha_sweep_pairs(Alpha alpha) {
    const auto base = concat(common_terms(), surprisal_terms_except(0));
    const std::string group = section("sweep", alpha);
    return {
        make_pair(group, "h_t", concat(base, {Term::surprisal(0)}), base),
        make_pair(group, "H_t", concat(base, {Term::entropy(alpha, 0)}), base),
        make_pair(group, "Both", concat(base, {Term::surprisal(0), Term::entropy(alpha, 0)}), base),
    };
}

}  // namespace antic
