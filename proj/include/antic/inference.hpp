#pragma once

// Model comparison: held-out delta llh, sign-flip permutation tests,
// Benjamini-Hochberg adjustment and Spearman correlation.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "antic/regression.hpp"

namespace antic {

inline constexpr std::size_t kDefaultPermutations = 10000;
inline constexpr std::size_t kExhaustiveLimit = 20;
inline constexpr double kDefaultFdr = 0.05;

// Mean of target - baseline.
double delta_llh(std::span<const double> target, std::span<const double> baseline);
// Checks that both fits scored the same rows first.
double delta_llh(const FitResult& target, const FitResult& baseline);

std::vector<double> paired_differences(const FitResult& target, const FitResult& baseline);

// Two-sided sign-flip test on the mean difference. Exhaustive for N <= 20
// (p = count / 2^N), Monte Carlo otherwise (p = (1 + count) / (1 + B)).
// Resample b draws its signs from its own stream derived from (seed, b).
double paired_permutation_test(std::span<const double> diffs, std::size_t resamples = kDefaultPermutations,
                               std::uint64_t seed = 0);

// Forces one mode; used to compare the two.
double permutation_test_exhaustive(std::span<const double> diffs);
double permutation_test_monte_carlo(std::span<const double> diffs, std::size_t resamples, std::uint64_t seed);

struct BhResult {
    std::vector<double> adjusted;  // input order
    std::vector<bool> rejected;
};

// Step-up procedure: adjusted p_(k) = min_{j >= k} m p_(j) / j, clipped at 1.
BhResult bh_adjust(std::span<const double> p_values, double q = kDefaultFdr);

// Pearson correlation of average ranks. Throws DomainError for constant input.
double spearman(std::span<const double> x, std::span<const double> y);

enum class Significance { positive, negative, ns };

std::string_view to_string(Significance s);  // "green", "red", "ns"
// "***" below 0.001, "**" below 0.01, "*" below 0.05, else "".
std::string_view stars(double p_adjusted);

struct ComparisonReport {
    std::string dataset;
    std::string label;
    std::string group;
    std::string column;
    std::string target_spec;
    std::string baseline_spec;
    std::size_t rows = 0;
    double delta_llh = 0.0;  // nats
    double p_value = 1.0;
    double p_adjusted = 1.0;
    Significance significance = Significance::ns;
    std::string stars;
};

// Fills p_adjusted, significance and stars over one family of reports.
void classify(std::vector<ComparisonReport>& family, double q = kDefaultFdr);

// Space-joined term names.
std::string spec_label(const TermList& terms);

// Paper-style table: delta llh in 1e-2 nats, stars and colour tag per row.
void write_reports_tsv(std::ostream& out, std::span<const ComparisonReport> reports);
nlohmann::json to_json(const ComparisonReport& report);

}  // namespace antic
