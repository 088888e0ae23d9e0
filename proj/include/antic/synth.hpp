#pragma once

// Synthetic corpora with known generating coefficients.
//
// A toy subword inventory and word lexicon feed a word-level Markov source;
// the built-in n-gram model is trained on that text and then sampled to make
// the corpus. Reading times follow RT = phi'x + N(0, sigma^2), truncated at 0.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>

#include <json.hpp>

#include "antic/corpus.hpp"
#include "antic/infotheory.hpp"
#include "antic/lm.hpp"
#include "antic/predictors.hpp"

namespace antic {

struct SourceConfig {
    std::uint32_t initial_units = 24;       // word-initial subwords
    std::uint32_t continuation_units = 12;  // word-internal subwords
    std::uint32_t lexicon_size = 200;
    std::uint32_t max_word_subwords = 3;
    double zipf_exponent = 1.0;
    // Each word puts a share drawn uniformly from [0, successor_bias] of its
    // successor mass on a few preferred words, so contexts range from flat to sharp.
    double successor_bias = 1.0;
    std::uint32_t preferred_successors = 1;
    std::uint32_t training_words = 200000;
    NgramConfig ngram{3, {0.01, 0.01, 0.98}};
};

struct GeneratorConfig {
    std::map<Term, double> true_phi;  // ms per unit; Term::intercept() allowed
    double noise_sigma = 25.0;        // ms
    std::uint32_t n_texts = 50;
    std::uint32_t words_per_text = 100;
    std::uint32_t readers = 1;
    // Logistic skip probability over the same terms; makes an eye-tracking corpus.
    std::optional<std::map<Term, double>> skip_model;
    SkipPolicy skip_policy = SkipPolicy::include_as_zero;
    std::uint64_t seed = 0;
    SourceConfig source;

    // Throws ConfigError.
    void validate() const;
};

struct SyntheticData {
    Corpus corpus;
    DistributionSet distributions;
    WordInfoTable infos;  // over the alphas used by true_phi and skip_model
};

SyntheticData generate(const GeneratorConfig& config);

// Writes corpus.tsv, dists.fulldist and its manifest, and truth.json.
void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data, const GeneratorConfig& config);

nlohmann::json to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

}  // namespace antic
