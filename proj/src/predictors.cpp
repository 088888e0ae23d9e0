#include "antic/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include <json.hpp>

#include "antic/error.hpp"
#include "tsv.hpp"

namespace antic {

namespace {

struct KindName {
    TermKind kind;
    std::string_view name;
};

constexpr KindName kKindNames[] = {
    {TermKind::intercept, "intercept"},
    {TermKind::length, "length"},
    {TermKind::unigram, "unigram"},
    {TermKind::surprisal, "surprisal"},
    {TermKind::entropy, "entropy"},
    {TermKind::successor_entropy, "successor_entropy"},
    {TermKind::delta_budget, "delta_budget"},
    {TermKind::under_budget, "under_budget"},
    {TermKind::over_budget, "over_budget"},
    {TermKind::abs_budget, "abs_budget"},
};

std::string lag_suffix(const Term& t) {
    if (t.kind == TermKind::successor_entropy) return "@t+1";
    return t.lag == 0 ? "@t" : "@t-" + std::to_string(t.lag);
}

}  // namespace

std::optional<double> term_value(const Term& term, const Text& text, std::size_t index, const WordInfoTable& infos) {
    if (term.kind == TermKind::intercept) return 1.0;
    if (term.kind == TermKind::successor_entropy) {
        const auto* info = infos.find({text.text_id, static_cast<std::uint32_t>(index)});
        if (!info || !info->successor_entropy_bits) return std::nullopt;
        return info->successor_entropy_bits->at(*term.alpha);
    }
    if (static_cast<std::size_t>(term.lag) > index) return std::nullopt;
    const std::size_t at = index - static_cast<std::size_t>(term.lag);
    const auto& word = text.words[at];
    switch (term.kind) {
        case TermKind::length: return static_cast<double>(word.length_chars);
        case TermKind::unigram: return word.unigram_logprob;
        default: break;
    }
    const auto* info = infos.find({text.text_id, static_cast<std::uint32_t>(at)});
    if (!info) return std::nullopt;
    if (term.kind == TermKind::surprisal) return info->surprisal_bits;
    const double entropy = info->entropy_bits.at(*term.alpha);
    if (term.kind == TermKind::entropy) return entropy;
    if (!info->surprisal_bits) return std::nullopt;
    const auto b = budget_terms(*info->surprisal_bits, entropy);
    switch (term.kind) {
        case TermKind::delta_budget: return b.delta;
        case TermKind::under_budget: return b.under;
        case TermKind::over_budget: return b.over;
        case TermKind::abs_budget: return b.abs;
        default: return std::nullopt;
    }
}

std::string_view to_string(TermKind kind) {
    for (const auto& k : kKindNames)
        if (k.kind == kind) return k.name;
    return "?";
}

std::string_view to_string(Response response) {
    return response == Response::reading_time ? "rt" : "skip_ratio";
}

bool Term::uses_entropy() const {
    return kind == TermKind::entropy || kind == TermKind::successor_entropy || is_budget();
}

bool Term::is_budget() const {
    return kind == TermKind::delta_budget || kind == TermKind::under_budget || kind == TermKind::over_budget ||
           kind == TermKind::abs_budget;
}

std::string Term::name() const {
    if (kind == TermKind::intercept) return "intercept";
    std::string out(to_string(kind));
    if (alpha) out += "[" + alpha->to_string() + "]";
    return out + lag_suffix(*this);
}

Term Term::parse(std::string_view name) {
    if (name == "intercept") return intercept();
    auto at = name.find('@');
    if (at == std::string_view::npos) throw ConfigError("bad term '" + std::string(name) + "'");
    auto head = name.substr(0, at);
    auto where = name.substr(at + 1);

    Term t;
    auto bracket = head.find('[');
    if (bracket != std::string_view::npos) {
        if (head.back() != ']') throw ConfigError("bad term '" + std::string(name) + "'");
        t.alpha = Alpha::parse(head.substr(bracket + 1, head.size() - bracket - 2));
        head = head.substr(0, bracket);
    }
    bool found = false;
    for (const auto& k : kKindNames) {
        if (k.name == head) {
            t.kind = k.kind;
            found = true;
        }
    }
    if (!found) throw ConfigError("unknown term kind '" + std::string(head) + "'");
    if (where == "t") {
        t.lag = 0;
    } else if (where == "t+1" && t.kind == TermKind::successor_entropy) {
        t.lag = 0;
    } else if (where.starts_with("t-")) {
        auto lag = detail::parse_int<int>(where.substr(2));
        if (!lag) throw ConfigError("bad lag in '" + std::string(name) + "'");
        t.lag = *lag;
    } else {
        throw ConfigError("bad position in '" + std::string(name) + "'");
    }
    t.validate();
    return t;
}

void Term::validate() const {
    if (lag < 0 || lag > kMaxLag) throw ConfigError(name() + ": lag must lie in 0.." + std::to_string(kMaxLag));
    if (uses_entropy() != alpha.has_value())
        throw ConfigError(std::string(to_string(kind)) + (uses_entropy() ? " needs an alpha" : " takes no alpha"));
    if (kind == TermKind::successor_entropy && lag != 0) throw ConfigError("successor entropy has lag 0 only");
    if (is_budget() && lag < 1) throw ConfigError(name() + ": budgeting terms need lag >= 1");
    if (kind == TermKind::intercept && lag != 0) throw ConfigError("intercept has no lag");
}

TermList common_terms() {
    TermList out;
    for (int lag = 0; lag <= kMaxLag; ++lag) {
        out.push_back(Term::length(lag));
        out.push_back(Term::unigram(lag));
    }
    return out;
}

TermList surprisal_terms() {
    TermList out;
    for (int lag = 0; lag <= kMaxLag; ++lag) out.push_back(Term::surprisal(lag));
    return out;
}

TermList surprisal_terms_except(int lag) {
    TermList out;
    for (int l = 0; l <= kMaxLag; ++l)
        if (l != lag) out.push_back(Term::surprisal(l));
    return out;
}

TermList concat(TermList a, const TermList& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

BudgetTerms budget_terms(double surprisal_bits, double entropy_bits) {
    const double d = surprisal_bits - entropy_bits;
    return {d, std::max(0.0, d), std::max(0.0, -d), std::abs(d)};
}

std::vector<std::string> FeatureMatrix::column_names() const {
    std::vector<std::string> names;
    for (const auto& t : columns) names.push_back(t.name());
    return names;
}

FeatureMatrix build_matrix(const Corpus& corpus, const WordInfoTable& infos, const TermList& spec, Response response,
                           const TermList* row_terms) {
    if (spec.empty()) throw ConfigError("predictor spec is empty");

    TermList columns{Term::intercept()};
    for (const auto& t : spec) {
        t.validate();
        if (t.kind != TermKind::intercept) columns.push_back(t);
    }
    const TermList& gate = row_terms ? *row_terms : spec;

    // Every alpha must have been computed.
    std::set<Alpha> missing;
    for (const auto* list : {&spec, &gate})
        for (const auto& t : *list)
            if (t.alpha && std::find(infos.alphas.begin(), infos.alphas.end(), *t.alpha) == infos.alphas.end())
                missing.insert(*t.alpha);
    if (!missing.empty()) {
        std::string msg = "entropies not computed for alpha =";
        for (auto a : missing) msg += " " + a.to_string();
        throw ConfigError(msg);
    }
    if (response == Response::skip_ratio && corpus.format != CorpusFormat::eye_tracking)
        throw ConfigError("skip-ratio response needs an eye-tracking corpus");

    const bool has_successor = std::any_of(gate.begin(), gate.end(), [](const Term& t) {
        return t.kind == TermKind::successor_entropy;
    });

    FeatureMatrix m;
    m.columns = columns;
    m.response_kind = response;
    std::vector<double> values;
    std::vector<double> y;
    for (const auto& text : corpus.texts) {
        const std::size_t n = text.words.size();
        for (std::size_t i = kMaxLag; i < n; ++i) {
            if (has_successor && i + 1 == n) continue;
            const auto& word = text.words[i];
            double target;
            if (response == Response::reading_time) {
                if (!word.mean_rt_ms) continue;
                target = *word.mean_rt_ms;
            } else {
                target = word.skip_ratio;
            }
            auto defined = [&](const Term& t) { return term_value(t, text, i, infos).has_value(); };
            const bool complete = std::all_of(gate.begin(), gate.end(), defined) &&
                                  std::all_of(columns.begin(), columns.end(), defined);
            if (!complete) {
                ++m.dropped_rows;
                continue;
            }
            for (const auto& t : columns) values.push_back(*term_value(t, text, i, infos));
            y.push_back(target);
            m.rows.push_back({text.text_id, static_cast<std::uint32_t>(i)});
        }
    }

    const auto rows = static_cast<Eigen::Index>(m.rows.size());
    const auto cols = static_cast<Eigen::Index>(columns.size());
    m.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), rows, cols);
    m.response = Eigen::Map<const Eigen::VectorXd>(y.data(), rows);
    return m;
}

MatrixPair build_pair(const Corpus& corpus, const WordInfoTable& infos, const TermList& target,
                      const TermList& baseline, Response response) {
    auto all = concat(target, baseline);
    return {build_matrix(corpus, infos, target, response, &all), build_matrix(corpus, infos, baseline, response, &all)};
}

FeatureMatrix with_extra_column(const FeatureMatrix& matrix, const Term& label, const Eigen::VectorXd& column) {
    if (column.size() != static_cast<Eigen::Index>(matrix.row_count()))
        throw ContractError("extra column length does not match the row count");
    FeatureMatrix out = matrix;
    out.columns.push_back(label);
    out.values.conservativeResize(Eigen::NoChange, out.values.cols() + 1);
    out.values.col(out.values.cols() - 1) = column;
    return out;
}

void write_matrix_tsv(std::ostream& out, const FeatureMatrix& matrix) {
    nlohmann::json header;
    header["columns"] = matrix.column_names();
    header["response"] = std::string(to_string(matrix.response_kind));
    header["rows"] = matrix.row_count();
    header["dropped_rows"] = matrix.dropped_rows;
    out << "# " << header.dump() << '\n';
    out << "text_id\tword_index";
    for (const auto& name : matrix.column_names()) out << '\t' << name;
    out << "\tresponse\n";
    for (std::size_t r = 0; r < matrix.row_count(); ++r) {
        const auto i = static_cast<Eigen::Index>(r);
        out << matrix.rows[r].text_id << '\t' << matrix.rows[r].word_index;
        for (Eigen::Index c = 0; c < matrix.values.cols(); ++c) out << '\t' << detail::format_double(matrix.values(i, c));
        out << '\t' << detail::format_double(matrix.response(i)) << '\n';
    }
}

std::vector<Alpha> alphas_of(const TermList& terms) {
    std::set<Alpha> s;
    for (const auto& t : terms)
        if (t.alpha) s.insert(*t.alpha);
    return {s.begin(), s.end()};
}

}  // namespace antic
