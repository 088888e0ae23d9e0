#pragma once

// Regression predictor terms, design matrices and the experiment catalogue.

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "antic/alpha.hpp"
#include "antic/corpus.hpp"
#include "antic/infotheory.hpp"

namespace antic {

enum class TermKind {
    intercept,
    length,
    unigram,
    surprisal,
    entropy,
    successor_entropy,
    delta_budget,
    under_budget,
    over_budget,
    abs_budget,
};

inline constexpr int kMaxLag = 3;

// One predictor column. `lag` counts words back from the current one.
struct Term {
    TermKind kind = TermKind::intercept;
    int lag = 0;
    std::optional<Alpha> alpha;  // entropy-family terms only

    static Term intercept() { return {}; }
    static Term length(int lag) { return {TermKind::length, lag, std::nullopt}; }
    static Term unigram(int lag) { return {TermKind::unigram, lag, std::nullopt}; }
    static Term surprisal(int lag) { return {TermKind::surprisal, lag, std::nullopt}; }
    static Term entropy(Alpha a, int lag) { return {TermKind::entropy, lag, a}; }
    static Term successor_entropy(Alpha a) { return {TermKind::successor_entropy, 0, a}; }
    static Term budget(TermKind kind, Alpha a, int lag) { return {kind, lag, a}; }

    bool uses_entropy() const;
    bool is_budget() const;

    // e.g. "surprisal@t-1", "entropy[0.5]@t", "successor_entropy[1]@t+1".
    std::string name() const;
    static Term parse(std::string_view name);

    // Throws ConfigError when lag/alpha do not fit the kind.
    void validate() const;

    friend auto operator<=>(const Term&, const Term&) = default;
};

using TermList = std::vector<Term>;

std::string_view to_string(TermKind kind);

// [|w_t|, u(w_t), ..., |w_{t-3}|, u(w_{t-3})]
TermList common_terms();
// [h_t(w_t), ..., h_{t-3}(w_{t-3})]
TermList surprisal_terms();
// surprisal_terms() without the term at `lag`.
TermList surprisal_terms_except(int lag);

TermList concat(TermList a, const TermList& b);

struct BudgetTerms {
    double delta = 0.0;
    double under = 0.0;
    double over = 0.0;
    double abs = 0.0;
};

// delta = h - H, under = max(0, h - H), over = max(0, H - h), abs = |h - H|.
BudgetTerms budget_terms(double surprisal_bits, double entropy_bits);

// Value of `term` for word `index` of `text`; empty when the lag runs past the
// text start, the successor is missing or the word has no finite surprisal.
std::optional<double> term_value(const Term& term, const Text& text, std::size_t index, const WordInfoTable& infos);

enum class Response { reading_time, skip_ratio };

std::string_view to_string(Response response);

struct RowId {
    std::uint32_t text_id = 0;
    std::uint32_t word_index = 0;
    friend auto operator<=>(const RowId&, const RowId&) = default;
};

struct FeatureMatrix {
    std::vector<RowId> rows;
    TermList columns;  // intercept first
    Eigen::MatrixXd values;
    Eigen::VectorXd response;
    Response response_kind = Response::reading_time;
    std::size_t dropped_rows = 0;  // rows lacking a term value

    std::size_t row_count() const { return rows.size(); }
    std::size_t column_count() const { return columns.size(); }
    std::vector<std::string> column_names() const;
};

// Builds the design matrix for `spec`. The intercept column is always first.
// Rows excluded: the first kMaxLag words of each text, the last word of each
// text when `row_terms` contains a successor term, words without a response
// under the corpus skip policy, and rows where any term in `row_terms` is
// undefined. `row_terms` defaults to `spec`; pass the union of a target and
// baseline spec to build both on identical rows.
FeatureMatrix build_matrix(const Corpus& corpus, const WordInfoTable& infos, const TermList& spec, Response response,
                           const TermList* row_terms = nullptr);

struct MatrixPair {
    FeatureMatrix target;
    FeatureMatrix baseline;
};

MatrixPair build_pair(const Corpus& corpus, const WordInfoTable& infos, const TermList& target,
                      const TermList& baseline, Response response);

// Appends a column (used for noise-column checks).
FeatureMatrix with_extra_column(const FeatureMatrix& matrix, const Term& label, const Eigen::VectorXd& column);

// TSV with a one-line JSON header ("# {...}") naming the columns.
void write_matrix_tsv(std::ostream& out, const FeatureMatrix& matrix);

// ---------------------------------------------------------------------------
// Experiment catalogue

enum class ModelKind { linear, logistic };

struct ExperimentPair {
    std::string label;   // group + column, e.g. "add[0.5] w_t-1"
    std::string group;   // section of the table ("replace[1]", "add[1]", ...)
    std::string column;  // table column ("w_t-3" ... "w_t", "Both", ...)
    TermList target;
    TermList baseline;
};

struct Experiment {
    std::string id;  // canonical id, e.g. "exp2"
    std::vector<Alpha> alphas;
    ModelKind model = ModelKind::linear;
    Response response = Response::reading_time;
    std::vector<ExperimentPair> pairs;
};

// Recognized ids: exp1, exp2 (= replace + add), exp2-add, exp2-replace, exp3,
// exp3-add, exp3-replace, exp4, exp5, exp6. exp2 uses alpha = 1 and exp3
// alpha = 1/2 unless given; exp4-6 cover both alpha = 1 and 1/2 unless one
// alpha is given. exp1 takes no alpha. Throws ConfigError for unknown ids.
Experiment experiment_pairs(std::string_view id, std::optional<Alpha> alpha = std::nullopt);

// "id" or "id:alpha".
Experiment parse_experiment(std::string_view spec);

// Pairs for the alpha sweep at one order: base = cmn + surp(!=t), targets add
// h_t, H_alpha(W_t), or both.
std::vector<ExperimentPair> alpha_sweep_pairs(Alpha alpha);

std::vector<Alpha> alphas_of(const TermList& terms);

}  // namespace antic
