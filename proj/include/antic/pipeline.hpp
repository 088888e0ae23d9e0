#pragma once

// End-to-end driver: corpora and distributions in, comparison tables out.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "antic/corpus.hpp"
#include "antic/inference.hpp"
#include "antic/infotheory.hpp"
#include "antic/lm.hpp"
#include "antic/predictors.hpp"
#include "antic/regression.hpp"

namespace antic {

struct DistributionSource {
    enum class Kind { fulldist, summary, ngram };
    Kind kind = Kind::fulldist;
    std::filesystem::path path;  // fulldist / summary
    NgramConfig ngram{2, {0.3, 0.7}};
    SubwordMode subwords = SubwordMode::character;
};

struct CorpusSource {
    std::string name;
    std::filesystem::path path;
    CorpusFormat format = CorpusFormat::self_paced;
    std::optional<SkipPolicy> skip_policy;  // default: zero for eye tracking
    std::optional<std::filesystem::path> frequencies;
    DistributionSource distributions;
    std::optional<std::filesystem::path> word_infos;  // cache from `antic entropy`
};

struct RunOptions {
    std::uint64_t fold_seed = 0;
    std::uint64_t seed = 0;  // permutation streams
    std::size_t permutations = kDefaultPermutations;
    bool grouped_folds = false;
    double fdr = kDefaultFdr;
};

struct PipelineConfig {
    std::vector<CorpusSource> corpora;
    std::vector<Alpha> alphas = default_alpha_grid();
    std::optional<SkipPolicy> skip_policy;  // overrides every corpus
    std::vector<std::string> experiments;   // "id" or "id:alpha"
    bool alpha_sweep = false;
    RunOptions options;
    std::filesystem::path output_dir = "antic-out";

    // Throws ConfigError: unknown experiments, alphas outside the grid, missing paths.
    void validate() const;
};

// Relative paths are resolved against `base_dir`.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig read_pipeline_config(const std::filesystem::path& path);

struct PreparedCorpus {
    std::string name;
    Corpus corpus;
    WordInfoTable infos;
};

SkipPolicy effective_policy(const CorpusSource& source, std::optional<SkipPolicy> override_policy);

// Ingests the corpus, assigns unigram log-probabilities and computes the word
// table over `alphas`. Every corpus word must have a distribution.
PreparedCorpus prepare_corpus(const CorpusSource& source, std::span<const Alpha> alphas,
                              std::optional<SkipPolicy> override_policy = std::nullopt);

// Fits models on one corpus, caching fits shared between pairs.
class ComparisonEngine {
public:
    ComparisonEngine(const PreparedCorpus& data, RunOptions options);

    const FitResult& fit(const TermList& spec, const TermList& row_terms, Response response, ModelKind model);

    // `family` names the table; it feeds the permutation seed.
    ComparisonReport compare(const ExperimentPair& pair, Response response, ModelKind model, std::string_view family);

    // Per-item differences of the last compare() call.
    const std::vector<double>& last_differences() const { return last_diffs_; }

    struct CachedFit {
        TermList spec;
        Response response;
        FitResult fit;
    };
    const std::map<std::string, CachedFit>& fits() const { return fits_; }
    const PreparedCorpus& data() const { return data_; }

private:
    const PreparedCorpus& data_;
    RunOptions options_;
    std::map<std::string, CachedFit> fits_;
    std::vector<double> last_diffs_;
};

// One experiment table across corpora; BH runs over the whole table.
std::vector<ComparisonReport> run_experiment(const Experiment& experiment, std::vector<ComparisonEngine>& engines,
                                             double fdr, std::ostream* log = nullptr);

struct SweepRow {
    ComparisonReport report;
    Alpha alpha;
    double ci_low = 0.0;  // nats, 95% normal interval on the mean difference
    double ci_high = 0.0;
};

std::vector<SweepRow> run_alpha_sweep(std::vector<ComparisonEngine>& engines, std::span<const Alpha> alphas, double fdr);

void write_sweep_tsv(std::ostream& out, std::span<const SweepRow> rows);
void write_effects_tsv(std::ostream& out, std::span<const ComparisonEngine> engines, std::span<const Alpha> alphas);
void write_spearman_tsv(std::ostream& out, std::span<const PreparedCorpus> corpora, std::span<const Alpha> alphas);

// Runs everything in the config and writes the report files. On failure the
// files written so far are removed and the error names the stage.
std::vector<std::filesystem::path> run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

}  // namespace antic
