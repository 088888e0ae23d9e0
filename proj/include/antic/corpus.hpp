#pragma once

// Per-word, per-reader reading measures and their aggregation across readers.
//
// Input is the corpus TSV:
//
//   text_id  word_index  surface  reader_id  rt_ms  skipped
//
// one row per (word token, reader). rt_ms is a decimal or empty, skipped is
// 0, 1 or empty. Words are aggregated to one mean RT and one skip ratio.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace antic {

enum class CorpusFormat { eye_tracking, self_paced };

// include_as_zero: skipped words count as RT 0. exclude: skipped measures are
// dropped per reader. not_applicable: self-paced reading, nothing can be skipped.
enum class SkipPolicy { include_as_zero, exclude, not_applicable };

CorpusFormat parse_corpus_format(std::string_view text);
SkipPolicy parse_skip_policy(std::string_view text);
std::string_view to_string(CorpusFormat format);
std::string_view to_string(SkipPolicy policy);

struct ReaderMeasure {
    std::string reader_id;
    std::optional<double> rt_ms;
    std::optional<bool> skipped;  // empty when the corpus carries no skip annotation
};

struct WordObservation {
    std::uint32_t text_id = 0;
    std::uint32_t word_index = 0;
    std::string surface;
    std::uint32_t length_chars = 0;
    double unigram_logprob = 0.0;  // bits
    std::vector<ReaderMeasure> measures;

    // Mean over the RT values admitted by the skip policy. Empty when no
    // reader contributes a value (e.g. every reader skipped under exclude).
    std::optional<double> mean_rt_ms;
    double skip_ratio = 0.0;
};

struct Text {
    std::uint32_t text_id = 0;
    std::vector<WordObservation> words;  // word_index == position
};

struct Corpus {
    CorpusFormat format = CorpusFormat::self_paced;
    SkipPolicy policy = SkipPolicy::not_applicable;
    std::vector<Text> texts;  // sorted by text_id

    std::size_t word_count() const;
    const WordObservation* find(std::uint32_t text_id, std::uint32_t word_index) const;
};

// Throws ConfigError when the policy does not fit the format.
void check_policy(CorpusFormat format, SkipPolicy policy);

// Recomputes mean_rt_ms and skip_ratio from the raw measures.
void aggregate(WordObservation& word, SkipPolicy policy);

Corpus parse_corpus(std::istream& in, CorpusFormat format, SkipPolicy policy);
Corpus ingest_corpus(const std::filesystem::path& path, CorpusFormat format, SkipPolicy policy);

// Raw per-reader rows in the ingestion format; parse_corpus of the output
// reproduces the same corpus.
void write_corpus_tsv(std::ostream& out, const Corpus& corpus);

// One row per word token with the aggregated fields.
void write_aggregates_tsv(std::ostream& out, const Corpus& corpus);

// Number of Unicode code points in a UTF-8 string.
std::uint32_t utf8_length(std::string_view text);

// Word frequency counts from a `surface  count` TSV.
using FrequencyTable = std::map<std::string, std::uint64_t, std::less<>>;
FrequencyTable read_frequencies(std::istream& in);
FrequencyTable read_frequencies(const std::filesystem::path& path);

// surface -> unigram log2-probability.
using UnigramTable = std::map<std::string, double, std::less<>>;

inline constexpr double kDefaultUnigramFloor = 1e-8;

// With an external table: log2(count / total), and log2(floor) for surfaces
// the table does not cover. Without one: add-one smoothed estimate from the
// corpus tokens, log2((c + 1) / (N + V)).
UnigramTable unigram_logprobs(const Corpus& corpus, const FrequencyTable* external,
                              double floor = kDefaultUnigramFloor);

void assign_unigram_logprobs(Corpus& corpus, const UnigramTable& table);

}  // namespace antic
