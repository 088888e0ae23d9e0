#include <cmath>
#include <numeric>

#include "antic/error.hpp"
#include "antic/lm.hpp"

namespace antic {

NgramModel::NgramModel(NgramConfig config, std::uint32_t vocab_size)
    : config_(std::move(config)), vocab_size_(vocab_size) {
    if (config_.order == 0) throw ConfigError("n-gram order must be at least 1");
    if (config_.weights.size() != config_.order)
        throw ConfigError("need one interpolation weight per order (" + std::to_string(config_.order) + ")");
    double sum = 0.0;
    for (double w : config_.weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("interpolation weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("interpolation weights must sum to 1");
    if (vocab_size_ == 0) throw ConfigError("vocabulary must not be empty");
    counts_.resize(config_.order);
}

void NgramModel::train(std::span<const std::vector<std::uint32_t>> sequences) {
    std::size_t tokens = 0;
    for (const auto& seq : sequences) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (seq[i] >= vocab_size_) throw ConfigError("training token id out of vocabulary range");
            for (unsigned k = 0; k < config_.order && k <= i; ++k) {
                std::vector<std::uint32_t> ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - k),
                                               seq.begin() + static_cast<std::ptrdiff_t>(i));
                auto& c = counts_[k][std::move(ctx)];
                ++c.total;
                ++c.next[seq[i]];
            }
        }
        tokens += seq.size();
    }
    if (tokens == 0) throw ConfigError("n-gram training text is empty");
}

void NgramModel::component(unsigned k, std::span<const std::uint32_t> history, std::vector<double>& out) const {
    const ContextCounts* counts = nullptr;
    if (history.size() >= k) {
        std::vector<std::uint32_t> ctx(history.end() - k, history.end());
        auto it = counts_[k].find(ctx);
        if (it != counts_[k].end()) counts = &it->second;
    }
    if (counts == nullptr) {
        if (k == 0) {
            // Untrained model: add-one over nothing is uniform.
            std::fill(out.begin(), out.end(), 1.0 / vocab_size_);
            return;
        }
        component(k - 1, history, out);
        return;
    }
    const double denom = static_cast<double>(counts->total) + vocab_size_;
    std::fill(out.begin(), out.end(), 1.0 / denom);
    for (const auto& [id, c] : counts->next) out[id] = (static_cast<double>(c) + 1.0) / denom;
}

std::vector<double> NgramModel::distribution(std::span<const std::uint32_t> history) const {
    std::vector<double> mix(vocab_size_, 0.0);
    std::vector<double> part(vocab_size_);
    for (unsigned k = 0; k < config_.order; ++k) {
        const double w = config_.weights[k];
        if (w == 0.0) continue;
        component(k, history, part);
        for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += w * part[i];
    }
    return mix;
}

std::vector<SubwordPosition> ngram_distributions(const NgramModel& model, std::span<const TokenizedText> texts) {
    std::vector<SubwordPosition> positions;
    const std::size_t context = model.config().order - 1;
    for (const auto& text : texts) {
        std::vector<std::uint32_t> history;
        for (std::size_t w = 0; w < text.words.size(); ++w) {
            const auto& word = text.words[w];
            if (word.empty()) throw ContractError("word without subwords");
            for (std::size_t s = 0; s < word.size(); ++s) {
                if (word[s] >= model.vocab_size()) throw ConfigError("token id out of vocabulary range");
                std::span<const std::uint32_t> tail(history);
                if (tail.size() > context) tail = tail.last(context);
                auto probs = model.distribution(tail);

                SubwordPosition p;
                p.text_id = text.text_id;
                p.word_index = static_cast<std::uint32_t>(w);
                p.subword_index = static_cast<std::uint16_t>(s);
                p.realized_id = word[s];
                p.logprobs.resize(probs.size());
                for (std::size_t i = 0; i < probs.size(); ++i) p.logprobs[i] = std::log(probs[i]);
                positions.push_back(std::move(p));
                history.push_back(word[s]);
            }
        }
    }
    return positions;
}

}  // namespace antic
