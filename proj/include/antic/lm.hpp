#pragma once

// Next-subword distributions: FULLDIST dump files, SUMMARY tables and the
// built-in interpolated n-gram model.
//
// FULLDIST layout (little-endian):
//
//   "RTD1" | u32 vocab_size | u32 position_count | u32 eos_id
//   per position:
//     u32 text_id | u32 word_index | u16 subword_index | u32 realized_id
//     vocab_size x f32 natural-log probabilities
//
// A JSON manifest next to the dump ("<file>.json") carries the vocabulary
// strings, the word-initial marker and the model name.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "antic/alpha.hpp"

namespace antic {

struct Corpus;

inline constexpr double kFileNormalizationTolerance = 1e-4;

struct Vocabulary {
    std::uint32_t size = 0;
    std::uint32_t eos_id = 0;
    std::vector<std::string> tokens;  // empty when no manifest was loaded
    std::string word_initial_marker = "\xE2\x96\x81";  // U+2581
    std::string model_name;

    bool is_word_initial(std::uint32_t id) const;
};

struct PositionSummary {
    double surprisal_bits = 0.0;
    std::map<Alpha, double> renyi_bits;
};

struct SubwordPosition {
    std::uint32_t text_id = 0;
    std::uint32_t word_index = 0;
    std::uint16_t subword_index = 0;  // 0 = word-initial
    std::uint32_t realized_id = 0;
    std::vector<double> logprobs;           // natural log; empty in summary format
    std::optional<PositionSummary> summary;  // set in summary format

    bool has_distribution() const { return !logprobs.empty(); }
};

struct DistributionSet {
    Vocabulary vocab;
    std::vector<SubwordPosition> positions;
};

// log(sum(exp(v))) without overflow.
double log_sum_exp(std::span<const double> values);

// Throws FormatError when |logsumexp - 0| exceeds the tolerance or an entry is NaN.
void check_normalized(const SubwordPosition& position, double tolerance, std::size_t index);

std::vector<std::byte> encode_fulldist(const DistributionSet& set);
DistributionSet decode_fulldist(std::span<const std::byte> bytes);

void write_fulldist(const std::filesystem::path& path, const DistributionSet& set);
// Loads the manifest too when "<path>.json" exists.
DistributionSet read_fulldist(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const Vocabulary& vocab);
void read_manifest(const std::filesystem::path& path, Vocabulary& vocab);

// SUMMARY TSV: text_id word_index subword_index surprisal_bits renyi_<a>_bits...
void write_summary_tsv(std::ostream& out, const DistributionSet& set, std::span<const Alpha> alphas);
DistributionSet read_summary_tsv(std::istream& in);
DistributionSet read_summary_tsv(const std::filesystem::path& path);

// Interpolated n-gram model over subword ids. Every order is add-one smoothed
// over the full vocabulary (EOS included); a context never seen in training
// falls through to the next lower order.
struct NgramConfig {
    unsigned order = 1;
    std::vector<double> weights{1.0};  // weights[k] belongs to the (k+1)-gram component
};

class NgramModel {
public:
    // vocab_size counts EOS.
    NgramModel(NgramConfig config, std::uint32_t vocab_size);

    void train(std::span<const std::vector<std::uint32_t>> sequences);

    // Next-token probabilities after `history` (the most recent tokens last).
    std::vector<double> distribution(std::span<const std::uint32_t> history) const;

    const NgramConfig& config() const { return config_; }
    std::uint32_t vocab_size() const { return vocab_size_; }

private:
    struct ContextCounts {
        std::uint64_t total = 0;
        std::map<std::uint32_t, std::uint64_t> next;
    };

    // component(k) fills `out` with the smoothed (k+1)-gram distribution.
    void component(unsigned k, std::span<const std::uint32_t> history, std::vector<double>& out) const;

    NgramConfig config_;
    std::uint32_t vocab_size_;
    std::vector<std::map<std::vector<std::uint32_t>, ContextCounts>> counts_;  // per order
};

// A text as subword ids grouped by word.
struct TokenizedText {
    std::uint32_t text_id = 0;
    std::vector<std::vector<std::uint32_t>> words;
};

// One position per subword, each conditioned on every earlier subword of its text.
std::vector<SubwordPosition> ngram_distributions(const NgramModel& model, std::span<const TokenizedText> texts);

// Subword segmentation used by the built-in model on real corpora.
enum class SubwordMode { whitespace, character };

struct TokenizedCorpus {
    Vocabulary vocab;
    std::vector<TokenizedText> texts;
};

// whitespace: one subword per word. character: marker + first code point,
// then one subword per remaining code point.
TokenizedCorpus tokenize_corpus(const Corpus& corpus, SubwordMode mode);

}  // namespace antic
