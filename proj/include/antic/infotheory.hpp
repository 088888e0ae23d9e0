#pragma once

// Surprisal and contextual Renyi entropy, at subword and word level.
// All quantities are in bits.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "antic/alpha.hpp"
#include "antic/lm.hpp"

namespace antic {

inline constexpr double kDistributionTolerance = 1e-4;

// Probabilities at or below this count as zero when measuring the support (alpha = 0).
inline constexpr double kSupportThreshold = 1e-12;

// Renyi entropy of order alpha:
//   alpha = 0   log2 |support|
//   alpha = 1   -sum p log2 p
//   alpha = inf -log2 max p
//   otherwise   log2(sum p^alpha) / (1 - alpha), evaluated in the log domain.
// Throws DomainError for negative entries or a sum off 1 by more than 1e-4.
double renyi_entropy(std::span<const double> probs, Alpha alpha);

// Same, from natural-log probabilities (renormalized first).
double renyi_entropy_from_logprobs(std::span<const double> logprobs, Alpha alpha);

// -log2 p[outcome]. Throws InfiniteSurprisalError when p[outcome] == 0.
double surprisal(std::span<const double> probs, std::size_t outcome);

// Surprisal of the realized token at a position (full or summary format).
double position_surprisal(const SubwordPosition& position);

// A word's surprisal is the sum over its canonical subwords.
double word_surprisal(std::span<const double> subword_surprisals);
double word_surprisal(std::span<const SubwordPosition> positions);

// Entropy at the word-initial subword position: a lower bound on the
// word-level Renyi entropy. Throws ContractError for non-initial positions.
double word_entropy(const SubwordPosition& first_position, Alpha alpha);

// Total preprocessing effort sum_w k^(-y(w)) with y(w) = h(w) / log2 k.
// Equals 1 for every k > 1. Throws DomainError for k <= 1.
double preprocessing_effort_total(std::span<const double> probs, double k);

struct WordKey {
    std::uint32_t text_id = 0;
    std::uint32_t word_index = 0;
    friend auto operator<=>(const WordKey&, const WordKey&) = default;
};

struct WordInfo {
    // Empty when some subword had probability zero.
    std::optional<double> surprisal_bits;
    std::map<Alpha, double> entropy_bits;
    // H_alpha(W_{t+1}); empty for the last word of a text.
    std::optional<std::map<Alpha, double>> successor_entropy_bits;
};

struct WordInfoTable {
    std::map<WordKey, WordInfo> words;
    std::vector<Alpha> alphas;
    std::size_t infinite_surprisal_words = 0;

    const WordInfo* find(WordKey key) const;
};

// Groups positions by word (subword indices must run 0, 1, ... within each
// word) and computes surprisal plus entropies for every alpha in the grid.
WordInfoTable compute_word_infos(std::span<const SubwordPosition> positions, std::span<const Alpha> alphas);

// WordInfo cache: text_id word_index surprisal_bits entropy_<a>_bits... successor_<a>_bits...
void write_word_infos_tsv(std::ostream& out, const WordInfoTable& table);
WordInfoTable read_word_infos_tsv(std::istream& in);

}  // namespace antic
