#include "antic/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include "antic/error.hpp"
#include "tsv.hpp"

namespace antic {

using detail::format_double;
using detail::parse_double;
using detail::parse_int;
using detail::split_tabs;
using detail::strip_cr;

namespace {

constexpr std::string_view kCorpusHeader = "text_id\tword_index\tsurface\treader_id\trt_ms\tskipped";

}  // namespace

CorpusFormat parse_corpus_format(std::string_view text) {
    if (text == "eye_tracking" || text == "eye") return CorpusFormat::eye_tracking;
    if (text == "self_paced" || text == "spr") return CorpusFormat::self_paced;
    throw ConfigError("unknown corpus format '" + std::string(text) + "'");
}

SkipPolicy parse_skip_policy(std::string_view text) {
    if (text == "zero" || text == "include_as_zero") return SkipPolicy::include_as_zero;
    if (text == "exclude") return SkipPolicy::exclude;
    if (text == "not_applicable" || text == "none") return SkipPolicy::not_applicable;
    throw ConfigError("unknown skip policy '" + std::string(text) + "'");
}

std::string_view to_string(CorpusFormat format) {
    return format == CorpusFormat::eye_tracking ? "eye_tracking" : "self_paced";
}

std::string_view to_string(SkipPolicy policy) {
    switch (policy) {
        case SkipPolicy::include_as_zero: return "zero";
        case SkipPolicy::exclude: return "exclude";
        case SkipPolicy::not_applicable: return "not_applicable";
    }
    return "?";
}

std::size_t Corpus::word_count() const {
    std::size_t n = 0;
    for (const auto& text : texts) n += text.words.size();
    return n;
}

const WordObservation* Corpus::find(std::uint32_t text_id, std::uint32_t word_index) const {
    auto it = std::lower_bound(texts.begin(), texts.end(), text_id,
                               [](const Text& t, std::uint32_t id) { return t.text_id < id; });
    if (it == texts.end() || it->text_id != text_id || word_index >= it->words.size()) return nullptr;
    return &it->words[word_index];
}

void check_policy(CorpusFormat format, SkipPolicy policy) {
    if (format == CorpusFormat::self_paced && policy != SkipPolicy::not_applicable)
        throw ConfigError("self-paced corpora cannot skip words; use skip policy not_applicable");
    if (format == CorpusFormat::eye_tracking && policy == SkipPolicy::not_applicable)
        throw ConfigError("eye-tracking corpora need skip policy zero or exclude");
}

void aggregate(WordObservation& word, SkipPolicy policy) {
    double sum = 0.0;
    std::size_t included = 0;
    std::size_t annotated = 0;
    std::size_t skipped = 0;
    for (const auto& m : word.measures) {
        if (m.skipped.has_value()) {
            ++annotated;
            if (*m.skipped) ++skipped;
        }
        if (m.skipped.value_or(false)) {
            if (policy == SkipPolicy::include_as_zero) {
                ++included;  // contributes 0 ms
            }
            continue;
        }
        // Readers without a measurement for this word are left out of the mean.
        if (m.rt_ms) {
            sum += *m.rt_ms;
            ++included;
        }
    }
    word.mean_rt_ms = included ? std::optional<double>(sum / static_cast<double>(included)) : std::nullopt;
    word.skip_ratio = annotated ? static_cast<double>(skipped) / static_cast<double>(annotated) : 0.0;
}

std::uint32_t utf8_length(std::string_view text) {
    std::uint32_t n = 0;
    for (unsigned char c : text)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

Corpus parse_corpus(std::istream& in, CorpusFormat format, SkipPolicy policy) {
    check_policy(format, policy);

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty corpus file", 1);
    ++line_no;
    if (strip_cr(line) != kCorpusHeader)
        throw ParseError("expected header '" + std::string(kCorpusHeader) + "'", line_no);

    // (text, word) -> observation; readers checked for duplicates per word.
    std::map<std::pair<std::uint32_t, std::uint32_t>, WordObservation> words;
    std::set<std::tuple<std::uint32_t, std::uint32_t, std::string>> seen;

    while (std::getline(in, line)) {
        ++line_no;
        auto row = strip_cr(line);
        if (row.empty()) continue;
        auto f = split_tabs(row);
        if (f.size() != 6) throw ParseError("expected 6 tab-separated fields, got " + std::to_string(f.size()), line_no);

        auto text_id = parse_int<std::uint32_t>(f[0]);
        auto word_index = parse_int<std::uint32_t>(f[1]);
        if (!text_id) throw ParseError("bad text_id '" + std::string(f[0]) + "'", line_no);
        if (!word_index) throw ParseError("bad word_index '" + std::string(f[1]) + "'", line_no);
        if (f[2].empty()) throw ParseError("empty surface", line_no);
        if (f[3].empty()) throw ParseError("empty reader_id", line_no);

        ReaderMeasure m;
        m.reader_id = std::string(f[3]);
        if (!f[4].empty()) {
            auto rt = parse_double(f[4]);
            if (!rt || !std::isfinite(*rt)) throw ParseError("bad rt_ms '" + std::string(f[4]) + "'", line_no);
            if (*rt < 0) throw ValidationError("line " + std::to_string(line_no) + ": negative RT " + std::string(f[4]));
            m.rt_ms = *rt;
        }
        if (f[5] == "1") {
            m.skipped = true;
        } else if (f[5] == "0") {
            m.skipped = false;
        } else if (!f[5].empty()) {
            throw ParseError("skipped must be 0, 1 or empty, got '" + std::string(f[5]) + "'", line_no);
        }

        if (format == CorpusFormat::self_paced && m.skipped.value_or(false))
            throw ValidationError("line " + std::to_string(line_no) + ": skipped word in a self-paced corpus");
        if (m.skipped.value_or(false) && m.rt_ms && *m.rt_ms != 0.0)
            throw ValidationError("line " + std::to_string(line_no) + ": skipped word with non-zero RT");

        if (!seen.emplace(*text_id, *word_index, m.reader_id).second)
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate (text " + std::to_string(*text_id) +
                                  ", word " + std::to_string(*word_index) + ", reader " + m.reader_id + ")");

        auto [it, inserted] = words.try_emplace({*text_id, *word_index});
        auto& w = it->second;
        if (inserted) {
            w.text_id = *text_id;
            w.word_index = *word_index;
            w.surface = std::string(f[2]);
            w.length_chars = utf8_length(w.surface);
        } else if (w.surface != f[2]) {
            throw ValidationError("line " + std::to_string(line_no) + ": surface '" + std::string(f[2]) +
                                  "' conflicts with '" + w.surface + "' for the same word token");
        }
        w.measures.push_back(std::move(m));
    }

    Corpus corpus;
    corpus.format = format;
    corpus.policy = policy;
    for (auto& [key, w] : words) {
        if (corpus.texts.empty() || corpus.texts.back().text_id != key.first) {
            corpus.texts.push_back(Text{key.first, {}});
        }
        auto& text = corpus.texts.back();
        if (w.word_index != text.words.size())
            throw ValidationError("text " + std::to_string(key.first) + ": word indices are not contiguous from 0 (missing " +
                                  std::to_string(text.words.size()) + ")");
        aggregate(w, policy);
        text.words.push_back(std::move(w));
    }
    return corpus;
}

Corpus ingest_corpus(const std::filesystem::path& path, CorpusFormat format, SkipPolicy policy) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open corpus file " + path.string());
    return parse_corpus(in, format, policy);
}

void write_corpus_tsv(std::ostream& out, const Corpus& corpus) {
    out << kCorpusHeader << '\n';
    for (const auto& text : corpus.texts) {
        for (const auto& w : text.words) {
            for (const auto& m : w.measures) {
                out << w.text_id << '\t' << w.word_index << '\t' << w.surface << '\t' << m.reader_id << '\t';
                if (m.rt_ms) out << format_double(*m.rt_ms);
                out << '\t';
                if (m.skipped) out << (*m.skipped ? '1' : '0');
                out << '\n';
            }
        }
    }
}

void write_aggregates_tsv(std::ostream& out, const Corpus& corpus) {
    out << "text_id\tword_index\tsurface\tlength_chars\tunigram_logprob\treaders\tmean_rt_ms\tskip_ratio\n";
    for (const auto& text : corpus.texts) {
        for (const auto& w : text.words) {
            out << w.text_id << '\t' << w.word_index << '\t' << w.surface << '\t' << w.length_chars << '\t'
                << format_double(w.unigram_logprob) << '\t' << w.measures.size() << '\t';
            if (w.mean_rt_ms) out << format_double(*w.mean_rt_ms);
            out << '\t' << format_double(w.skip_ratio) << '\n';
        }
    }
}

FrequencyTable read_frequencies(std::istream& in) {
    FrequencyTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto row = strip_cr(line);
        if (row.empty()) continue;
        auto f = split_tabs(row);
        if (f.size() != 2) throw ParseError("expected 'surface<TAB>count'", line_no);
        auto count = parse_int<std::uint64_t>(f[1]);
        if (!count) {
            if (line_no == 1) continue;  // header row
            throw ParseError("bad count '" + std::string(f[1]) + "'", line_no);
        }
        table[std::string(f[0])] += *count;
    }
    return table;
}

FrequencyTable read_frequencies(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open frequency file " + path.string());
    return read_frequencies(in);
}

UnigramTable unigram_logprobs(const Corpus& corpus, const FrequencyTable* external, double floor) {
    UnigramTable table;
    if (external) {
        if (!(floor > 0.0 && floor <= 1.0)) throw ConfigError("unigram floor must lie in (0, 1]");
        double total = 0.0;
        for (const auto& [_, c] : *external) total += static_cast<double>(c);
        if (total <= 0.0) throw ConfigError("frequency file has zero total count");
        for (const auto& [s, c] : *external) {
            table[s] = c > 0 ? std::log2(static_cast<double>(c) / total) : std::log2(floor);
        }
        for (const auto& text : corpus.texts)
            for (const auto& w : text.words)
                if (!table.contains(w.surface)) table[w.surface] = std::log2(floor);
        return table;
    }

    std::map<std::string, std::uint64_t, std::less<>> counts;
    std::uint64_t n = 0;
    for (const auto& text : corpus.texts) {
        for (const auto& w : text.words) {
            ++counts[w.surface];
            ++n;
        }
    }
    if (n == 0) throw ConfigError("cannot estimate unigram probabilities from an empty corpus");
    const double denom = static_cast<double>(n + counts.size());
    for (const auto& [s, c] : counts) table[s] = std::log2(static_cast<double>(c + 1) / denom);
    return table;
}

void assign_unigram_logprobs(Corpus& corpus, const UnigramTable& table) {
    for (auto& text : corpus.texts) {
        for (auto& w : text.words) {
            auto it = table.find(w.surface);
            if (it == table.end()) throw ValidationError("no unigram probability for '" + w.surface + "'");
            w.unigram_logprob = it->second;
        }
    }
}

}  // namespace antic
