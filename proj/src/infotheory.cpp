#include "antic/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>

#include "antic/error.hpp"
#include "tsv.hpp"

namespace antic {

namespace {

constexpr double kLn2 = std::numbers::ln2;

// Natural-log probabilities of a validated, renormalized distribution.
std::vector<double> checked_logprobs(std::span<const double> probs) {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("probabilities must be finite and non-negative");
        sum += p;
    }
    if (probs.empty() || std::abs(sum - 1.0) > kDistributionTolerance)
        throw DomainError("probabilities sum to " + detail::format_double(sum) + ", not 1");
    const double log_sum = std::log(sum);
    std::vector<double> lp(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) lp[i] = std::log(probs[i]) - log_sum;
    return lp;
}

double renyi_from_normalized_logprobs(std::span<const double> lp, Alpha alpha) {
    if (alpha.is_zero()) {
        const double threshold = std::log(kSupportThreshold);
        auto support = std::count_if(lp.begin(), lp.end(), [&](double v) { return v > threshold; });
        return std::log2(static_cast<double>(support));
    }
    if (alpha.is_infinite()) {
        return std::max(0.0, -*std::max_element(lp.begin(), lp.end()) / kLn2);
    }
    if (alpha.is_shannon()) {
        double h = 0.0;
        for (double v : lp)
            if (std::isfinite(v)) h -= std::exp(v) * v;
        return std::max(0.0, h / kLn2);
    }
    const double a = alpha.value();
    std::vector<double> scaled;
    scaled.reserve(lp.size());
    for (double v : lp)
        if (std::isfinite(v)) scaled.push_back(a * v);
    return std::max(0.0, log_sum_exp(scaled) / (1.0 - a) / kLn2);
}

}  // namespace

Alpha::Alpha(double value) : value_(value) {
    if (!(value >= 0.0)) throw DomainError("alpha must be >= 0");
}

Alpha Alpha::parse(std::string_view text) {
    if (text == "inf" || text == "Inf" || text == "infinity") return infinity();
    auto v = detail::parse_double(text);
    if (!v) throw ConfigError("bad alpha '" + std::string(text) + "'");
    if (!(*v >= 0.0)) throw ConfigError("alpha must be >= 0, got '" + std::string(text) + "'");
    return Alpha(*v);
}

std::string Alpha::to_string() const { return detail::format_double(value_); }

std::vector<Alpha> default_alpha_grid() {
    return {Alpha(0.0), Alpha(0.25), Alpha(0.5), Alpha(0.75), Alpha(1.0),
            Alpha(1.5), Alpha(2.0),  Alpha(4.0), Alpha::infinity()};
}

double renyi_entropy(std::span<const double> probs, Alpha alpha) {
    auto lp = checked_logprobs(probs);
    return renyi_from_normalized_logprobs(lp, alpha);
}

double renyi_entropy_from_logprobs(std::span<const double> logprobs, Alpha alpha) {
    if (logprobs.empty()) throw DomainError("empty distribution");
    const double lse = log_sum_exp(logprobs);
    if (!std::isfinite(lse) || std::abs(lse) > kDistributionTolerance)
        throw DomainError("log-probabilities are not normalized");
    std::vector<double> lp(logprobs.begin(), logprobs.end());
    for (auto& v : lp) v -= lse;
    return renyi_from_normalized_logprobs(lp, alpha);
}

double surprisal(std::span<const double> probs, std::size_t outcome) {
    if (outcome >= probs.size()) throw DomainError("outcome index out of range");
    auto lp = checked_logprobs(probs);
    if (!std::isfinite(lp[outcome])) throw InfiniteSurprisalError("outcome has probability zero");
    return -lp[outcome] / kLn2;
}

double position_surprisal(const SubwordPosition& position) {
    if (!position.has_distribution()) {
        if (!position.summary) throw ContractError("position carries neither a distribution nor a summary");
        return position.summary->surprisal_bits;
    }
    if (position.realized_id >= position.logprobs.size()) throw DomainError("realized token out of range");
    const double lp = position.logprobs[position.realized_id] - log_sum_exp(position.logprobs);
    if (!std::isfinite(lp)) throw InfiniteSurprisalError("realized token has probability zero");
    return std::max(0.0, -lp / kLn2);
}

double word_surprisal(std::span<const double> subword_surprisals) {
    if (subword_surprisals.empty()) throw ContractError("a word needs at least one subword");
    return std::accumulate(subword_surprisals.begin(), subword_surprisals.end(), 0.0);
}

double word_surprisal(std::span<const SubwordPosition> positions) {
    if (positions.empty()) throw ContractError("a word needs at least one subword");
    double total = 0.0;
    for (const auto& p : positions) total += position_surprisal(p);
    return total;
}

double word_entropy(const SubwordPosition& first_position, Alpha alpha) {
    if (first_position.subword_index != 0)
        throw ContractError("word entropy is defined at the word-initial subword, got subword index " +
                            std::to_string(first_position.subword_index));
    if (first_position.has_distribution()) return renyi_entropy_from_logprobs(first_position.logprobs, alpha);
    if (!first_position.summary) throw ContractError("position carries neither a distribution nor a summary");
    auto it = first_position.summary->renyi_bits.find(alpha);
    if (it == first_position.summary->renyi_bits.end())
        throw ConfigError("summary has no Renyi entropy for alpha = " + alpha.to_string());
    return it->second;
}

double preprocessing_effort_total(std::span<const double> probs, double k) {
    if (!(k > 1.0) || !std::isfinite(k)) throw DomainError("k must be a finite number > 1");
    checked_logprobs(probs);
    const double log2_k = std::log2(k);
    double total = 0.0;
    for (double p : probs) {
        const double h = -std::log2(p);          // surprisal of w
        const double reading_time = h / log2_k;  // y(w) = h(w) / log2 k
        total += std::pow(k, -reading_time);     // pe(w) = k^-y(w)
    }
    return total;
}

const WordInfo* WordInfoTable::find(WordKey key) const {
    auto it = words.find(key);
    return it == words.end() ? nullptr : &it->second;
}

WordInfoTable compute_word_infos(std::span<const SubwordPosition> positions, std::span<const Alpha> alphas) {
    WordInfoTable table;
    table.alphas.assign(alphas.begin(), alphas.end());
    std::sort(table.alphas.begin(), table.alphas.end());
    table.alphas.erase(std::unique(table.alphas.begin(), table.alphas.end()), table.alphas.end());

    std::vector<std::size_t> order(positions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& pa = positions[a];
        const auto& pb = positions[b];
        return std::tie(pa.text_id, pa.word_index, pa.subword_index) <
               std::tie(pb.text_id, pb.word_index, pb.subword_index);
    });

    std::size_t i = 0;
    while (i < order.size()) {
        const auto& first = positions[order[i]];
        const WordKey key{first.text_id, first.word_index};
        std::size_t j = i;
        std::vector<SubwordPosition> word;
        while (j < order.size() && positions[order[j]].text_id == key.text_id &&
               positions[order[j]].word_index == key.word_index) {
            const auto& p = positions[order[j]];
            if (p.subword_index != j - i)
                throw FormatError("text " + std::to_string(key.text_id) + ", word " + std::to_string(key.word_index) +
                                  ": subword indices must run 0, 1, ... without gaps or duplicates");
            word.push_back(p);
            ++j;
        }

        WordInfo info;
        try {
            info.surprisal_bits = word_surprisal(word);
        } catch (const InfiniteSurprisalError&) {
            ++table.infinite_surprisal_words;
        }
        for (auto a : table.alphas) info.entropy_bits[a] = word_entropy(word.front(), a);
        table.words.emplace(key, std::move(info));
        i = j;
    }

    for (auto& [key, info] : table.words) {
        auto next = table.words.find(WordKey{key.text_id, key.word_index + 1});
        if (next != table.words.end()) info.successor_entropy_bits = next->second.entropy_bits;
    }
    return table;
}

void write_word_infos_tsv(std::ostream& out, const WordInfoTable& table) {
    out << "text_id\tword_index\tsurprisal_bits";
    for (auto a : table.alphas) out << "\tentropy_" << a.to_string() << "_bits";
    for (auto a : table.alphas) out << "\tsuccessor_" << a.to_string() << "_bits";
    out << '\n';
    for (const auto& [key, info] : table.words) {
        out << key.text_id << '\t' << key.word_index << '\t';
        if (info.surprisal_bits) out << detail::format_double(*info.surprisal_bits);
        for (auto a : table.alphas) out << '\t' << detail::format_double(info.entropy_bits.at(a));
        for (auto a : table.alphas) {
            out << '\t';
            if (info.successor_entropy_bits) out << detail::format_double(info.successor_entropy_bits->at(a));
        }
        out << '\n';
    }
}

WordInfoTable read_word_infos_tsv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty word-info file", 1);
    auto header = detail::split_tabs(detail::strip_cr(line));
    if (header.size() < 3 || (header.size() - 3) % 2 != 0 || header[0] != "text_id" || header[1] != "word_index" ||
        header[2] != "surprisal_bits")
        throw ParseError("bad word-info header", 1);
    WordInfoTable table;
    const std::size_t n_alpha = (header.size() - 3) / 2;
    for (std::size_t a = 0; a < n_alpha; ++a) {
        auto name = header[3 + a];
        if (!name.starts_with("entropy_") || !name.ends_with("_bits")) throw ParseError("bad column", 1);
        name.remove_prefix(8);
        name.remove_suffix(5);
        table.alphas.push_back(Alpha::parse(name));
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto row = detail::strip_cr(line);
        if (row.empty()) continue;
        auto f = detail::split_tabs(row);
        if (f.size() != header.size()) throw ParseError("wrong number of fields", line_no);
        auto t = detail::parse_int<std::uint32_t>(f[0]);
        auto w = detail::parse_int<std::uint32_t>(f[1]);
        if (!t || !w) throw ParseError("bad word key", line_no);
        WordInfo info;
        if (!f[2].empty()) {
            auto h = detail::parse_double(f[2]);
            if (!h) throw ParseError("bad surprisal", line_no);
            info.surprisal_bits = *h;
        } else {
            ++table.infinite_surprisal_words;
        }
        for (std::size_t a = 0; a < n_alpha; ++a) {
            auto v = detail::parse_double(f[3 + a]);
            if (!v) throw ParseError("bad entropy", line_no);
            info.entropy_bits[table.alphas[a]] = *v;
        }
        if (!f[3 + n_alpha].empty()) {
            std::map<Alpha, double> succ;
            for (std::size_t a = 0; a < n_alpha; ++a) {
                auto v = detail::parse_double(f[3 + n_alpha + a]);
                if (!v) throw ParseError("bad successor entropy", line_no);
                succ[table.alphas[a]] = *v;
            }
            info.successor_entropy_bits = std::move(succ);
        }
        table.words.emplace(WordKey{*t, *w}, std::move(info));
    }
    return table;
}

void write_summary_tsv(std::ostream& out, const DistributionSet& set, std::span<const Alpha> alphas) {
    std::vector<Alpha> sorted(alphas.begin(), alphas.end());
    std::sort(sorted.begin(), sorted.end());
    out << "text_id\tword_index\tsubword_index\tsurprisal_bits";
    for (auto a : sorted) out << "\trenyi_" << a.to_string() << "_bits";
    out << '\n';
    for (const auto& p : set.positions) {
        out << p.text_id << '\t' << p.word_index << '\t' << p.subword_index << '\t'
            << detail::format_double(position_surprisal(p));
        for (auto a : sorted) {
            double h = p.has_distribution() ? renyi_entropy_from_logprobs(p.logprobs, a) : p.summary->renyi_bits.at(a);
            out << '\t' << detail::format_double(h);
        }
        out << '\n';
    }
}

}  // namespace antic
