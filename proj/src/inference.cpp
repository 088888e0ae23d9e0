#include "antic/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>

#include "antic/error.hpp"
#include "antic/random.hpp"
#include "tsv.hpp"

namespace antic {

namespace {

// Slack for ties between a resampled sum and the observed one, relative to sum |d|.
constexpr double kTieSlack = 1e-12;

struct Observed {
    double stat = 0.0;
    double slack = 0.0;
    bool all_zero = true;
};

Observed observe(std::span<const double> diffs) {
    if (diffs.size() < 2) throw ContractError("permutation test needs at least 2 differences");
    Observed o;
    double sum = 0.0, mass = 0.0;
    for (double d : diffs) {
        if (!std::isfinite(d)) throw DomainError("non-finite difference");
        sum += d;
        mass += std::abs(d);
        if (d != 0.0) o.all_zero = false;
    }
    o.stat = std::abs(sum);
    o.slack = kTieSlack * mass;
    return o;
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double delta_llh(std::span<const double> target, std::span<const double> baseline) {
    if (target.size() != baseline.size()) throw ContractError("target and baseline score different numbers of items");
    if (target.empty()) throw ContractError("no items to compare");
    double sum = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) sum += target[i] - baseline[i];
    return sum / static_cast<double>(target.size());
}

std::vector<double> paired_differences(const FitResult& target, const FitResult& baseline) {
    if (target.rows != baseline.rows) throw ContractError("target and baseline were fit on different rows");
    if (target.per_item_heldout_llh.size() != baseline.per_item_heldout_llh.size())
        throw ContractError("target and baseline score different numbers of items");
    std::vector<double> d(target.per_item_heldout_llh.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = target.per_item_heldout_llh[i] - baseline.per_item_heldout_llh[i];
    return d;
}

double delta_llh(const FitResult& target, const FitResult& baseline) {
    if (target.rows != baseline.rows) throw ContractError("target and baseline were fit on different rows");
    return delta_llh(target.per_item_heldout_llh, baseline.per_item_heldout_llh);
}

double permutation_test_exhaustive(std::span<const double> diffs) {
    const auto obs = observe(diffs);
    if (obs.all_zero) return 1.0;
    const std::size_t n = diffs.size();
    if (n > 30) throw ContractError("exhaustive permutation test is limited to 30 items");

    // Gray code walk: one sign changes per step.
    double sum = std::accumulate(diffs.begin(), diffs.end(), 0.0);
    std::vector<bool> flipped(n, false);
    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint64_t count = 0;
    for (std::uint64_t i = 0; i < total; ++i) {
        if (i > 0) {
            const auto bit = static_cast<std::size_t>(std::countr_zero(i));
            sum += flipped[bit] ? 2.0 * diffs[bit] : -2.0 * diffs[bit];
            flipped[bit] = !flipped[bit];
        }
        if (std::abs(sum) >= obs.stat - obs.slack) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(total);
}

double permutation_test_monte_carlo(std::span<const double> diffs, std::size_t resamples, std::uint64_t seed) {
    const auto obs = observe(diffs);
    if (obs.all_zero) return 1.0;
    if (resamples == 0) throw ConfigError("need at least one resample");
    std::uint64_t count = 0;
    const std::size_t n = diffs.size();
    for (std::size_t b = 0; b < resamples; ++b) {
        SplitMix64 rng(derive_seed(seed, b));
        double sum = 0.0;
        for (std::size_t i = 0; i < n; i += 64) {
            std::uint64_t bits = rng();
            const std::size_t end = std::min(n, i + 64);
            for (std::size_t j = i; j < end; ++j, bits >>= 1) sum += (bits & 1u) ? -diffs[j] : diffs[j];
        }
        if (std::abs(sum) >= obs.stat - obs.slack) ++count;
    }
    return static_cast<double>(1 + count) / static_cast<double>(1 + resamples);
}

double paired_permutation_test(std::span<const double> diffs, std::size_t resamples, std::uint64_t seed) {
    if (diffs.size() <= kExhaustiveLimit) return permutation_test_exhaustive(diffs);
    return permutation_test_monte_carlo(diffs, resamples, seed);
}

BhResult bh_adjust(std::span<const double> p_values, double q) {
    const std::size_t m = p_values.size();
    BhResult r;
    r.adjusted.assign(m, 1.0);
    r.rejected.assign(m, false);
    if (m == 0) return r;
    for (double p : p_values)
        if (!(p > 0.0 && p <= 1.0)) throw DomainError("p-values must lie in (0, 1]");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p_values[a] < p_values[b]; });
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const double v = static_cast<double>(m) * p_values[order[k]] / static_cast<double>(k + 1);
        running = std::min(running, v);
        r.adjusted[order[k]] = std::min(std::max(running, p_values[order[k]]), 1.0);
    }
    for (std::size_t i = 0; i < m; ++i) r.rejected[i] = r.adjusted[i] <= q;
    return r;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ContractError("spearman inputs differ in length");
    if (x.size() < 2) throw ContractError("spearman needs at least 2 points");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DomainError("correlation is undefined for a constant vector");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string_view to_string(Significance s) {
    switch (s) {
        case Significance::positive: return "green";
        case Significance::negative: return "red";
        default: return "ns";
    }
}

std::string_view stars(double p_adjusted) {
    if (p_adjusted < 0.001) return "***";
    if (p_adjusted < 0.01) return "**";
    if (p_adjusted < 0.05) return "*";
    return "";
}

void classify(std::vector<ComparisonReport>& family, double q) {
    std::vector<double> p;
    for (const auto& r : family) p.push_back(r.p_value);
    const auto bh = bh_adjust(p, q);
    for (std::size_t i = 0; i < family.size(); ++i) {
        auto& r = family[i];
        r.p_adjusted = bh.adjusted[i];
        r.stars = std::string(stars(r.p_adjusted));
        r.significance = Significance::ns;
        if (bh.rejected[i] && r.delta_llh > 0.0) r.significance = Significance::positive;
        if (bh.rejected[i] && r.delta_llh < 0.0) r.significance = Significance::negative;
    }
}

std::string spec_label(const TermList& terms) {
    std::string out;
    for (const auto& t : terms) {
        if (!out.empty()) out += ' ';
        out += t.name();
    }
    return out;
}

void write_reports_tsv(std::ostream& out, std::span<const ComparisonReport> reports) {
    out << "dataset\tgroup\tcolumn\tdelta_llh_1e-2_nats\tstars\tcolor\tp_value\tp_adjusted\trows\ttarget\tbaseline\n";
    for (const auto& r : reports) {
        out << r.dataset << '\t' << r.group << '\t' << r.column << '\t' << detail::format_fixed(100.0 * r.delta_llh, 3)
            << '\t' << r.stars << '\t' << to_string(r.significance) << '\t' << detail::format_double(r.p_value) << '\t'
            << detail::format_double(r.p_adjusted) << '\t' << r.rows << '\t' << r.target_spec << '\t'
            << r.baseline_spec << '\n';
    }
}

nlohmann::json to_json(const ComparisonReport& r) {
    return {
        {"dataset", r.dataset},
        {"label", r.label},
        {"group", r.group},
        {"column", r.column},
        {"target", r.target_spec},
        {"baseline", r.baseline_spec},
        {"rows", r.rows},
        {"delta_llh", r.delta_llh},
        {"p_value", r.p_value},
        {"p_adjusted", r.p_adjusted},
        {"significance", std::string(to_string(r.significance))},
        {"stars", r.stars},
    };
}

}  // namespace antic
