#include "antic/lm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <set>

#include <json.hpp>

#include "antic/corpus.hpp"
#include "antic/error.hpp"
#include "tsv.hpp"

namespace antic {

namespace {

constexpr char kMagic[4] = {'R', 'T', 'D', '1'};
constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kPositionPrefixBytes = 4 + 4 + 2 + 4;

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::byte>& out) : out_(out) {}

    template <typename T>
    void put(T value) {
        static_assert(std::is_trivially_copyable_v<T>);
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        for (unsigned char b : raw) out_.push_back(static_cast<std::byte>(b));
    }

private:
    std::vector<std::byte>& out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::byte> in) : in_(in) {}

    template <typename T>
    T get() {
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, in_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, raw, sizeof(T));
        return value;
    }

private:
    std::span<const std::byte> in_;
    std::size_t pos_ = 0;
};

std::filesystem::path manifest_path(const std::filesystem::path& dump) {
    auto p = dump;
    p += ".json";
    return p;
}

}  // namespace

bool Vocabulary::is_word_initial(std::uint32_t id) const {
    if (id >= tokens.size() || id == eos_id) return false;
    return tokens[id].starts_with(word_initial_marker);
}

double log_sum_exp(std::span<const double> values) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : values) hi = std::max(hi, v);
    if (!std::isfinite(hi)) return hi;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

void check_normalized(const SubwordPosition& position, double tolerance, std::size_t index) {
    for (double v : position.logprobs) {
        if (std::isnan(v) || v > 0.0)
            throw FormatError("position " + std::to_string(index) + ": invalid log-probability");
    }
    double lse = log_sum_exp(position.logprobs);
    if (!(std::abs(lse) <= tolerance)) {
        throw FormatError("position " + std::to_string(index) + " (text " + std::to_string(position.text_id) +
                          ", word " + std::to_string(position.word_index) + ", subword " +
                          std::to_string(position.subword_index) + "): distribution not normalized, logsumexp = " +
                          detail::format_double(lse));
    }
}

std::vector<std::byte> encode_fulldist(const DistributionSet& set) {
    const auto& vocab = set.vocab;
    if (vocab.size == 0) throw FormatError("vocabulary size must be positive");
    if (vocab.eos_id >= vocab.size) throw FormatError("eos_id out of range");

    std::vector<std::byte> out;
    out.reserve(kHeaderBytes + set.positions.size() * (kPositionPrefixBytes + 4 * std::size_t{vocab.size}));
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    ByteWriter w(out);
    w.put<std::uint32_t>(vocab.size);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(set.positions.size()));
    w.put<std::uint32_t>(vocab.eos_id);
    for (std::size_t i = 0; i < set.positions.size(); ++i) {
        const auto& p = set.positions[i];
        if (p.logprobs.size() != vocab.size)
            throw FormatError("position " + std::to_string(i) + " has " + std::to_string(p.logprobs.size()) +
                              " log-probabilities, vocabulary has " + std::to_string(vocab.size));
        if (p.realized_id >= vocab.size) throw FormatError("position " + std::to_string(i) + ": realized_id out of range");
        w.put<std::uint32_t>(p.text_id);
        w.put<std::uint32_t>(p.word_index);
        w.put<std::uint16_t>(p.subword_index);
        w.put<std::uint32_t>(p.realized_id);
        for (double lp : p.logprobs) w.put<float>(static_cast<float>(lp));
    }
    return out;
}

DistributionSet decode_fulldist(std::span<const std::byte> bytes) {
    if (bytes.size() < kHeaderBytes) throw FormatError("truncated header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic, expected RTD1");

    ByteReader header(bytes.subspan(4));
    DistributionSet set;
    set.vocab.size = header.get<std::uint32_t>();
    const auto count = header.get<std::uint32_t>();
    set.vocab.eos_id = header.get<std::uint32_t>();
    if (set.vocab.size == 0) throw FormatError("vocabulary size must be positive");
    if (set.vocab.eos_id >= set.vocab.size) throw FormatError("eos_id out of range");

    const std::size_t stride = kPositionPrefixBytes + 4 * std::size_t{set.vocab.size};
    const std::size_t expected = kHeaderBytes + std::size_t{count} * stride;
    if (bytes.size() < expected) {
        throw FormatError("truncated payload: header declares " + std::to_string(count) + " positions, file holds " +
                          std::to_string((bytes.size() - kHeaderBytes) / stride));
    }
    if (bytes.size() > expected) throw FormatError("trailing bytes after the declared positions");

    ByteReader r(bytes.subspan(kHeaderBytes));
    set.positions.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto& p = set.positions[i];
        p.text_id = r.get<std::uint32_t>();
        p.word_index = r.get<std::uint32_t>();
        p.subword_index = r.get<std::uint16_t>();
        p.realized_id = r.get<std::uint32_t>();
        if (p.realized_id >= set.vocab.size)
            throw FormatError("position " + std::to_string(i) + ": realized_id " + std::to_string(p.realized_id) +
                              " out of range");
        p.logprobs.resize(set.vocab.size);
        for (auto& lp : p.logprobs) lp = static_cast<double>(r.get<float>());
        check_normalized(p, kFileNormalizationTolerance, i);
    }
    return set;
}

void write_fulldist(const std::filesystem::path& path, const DistributionSet& set) {
    auto bytes = encode_fulldist(set);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!set.vocab.tokens.empty() || !set.vocab.model_name.empty()) write_manifest(manifest_path(path), set.vocab);
}

DistributionSet read_fulldist(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open distribution file " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto set = decode_fulldist(std::as_bytes(std::span(raw)));
    if (std::filesystem::exists(manifest_path(path))) read_manifest(manifest_path(path), set.vocab);
    return set;
}

void write_manifest(const std::filesystem::path& path, const Vocabulary& vocab) {
    nlohmann::json j;
    j["model"] = vocab.model_name;
    j["word_initial_marker"] = vocab.word_initial_marker;
    j["eos_id"] = vocab.eos_id;
    j["vocabulary"] = vocab.tokens;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void read_manifest(const std::filesystem::path& path, Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest " + path.string() + ": " + e.what());
    }
    auto tokens = j.value("vocabulary", std::vector<std::string>{});
    if (!tokens.empty() && tokens.size() != vocab.size)
        throw FormatError("manifest lists " + std::to_string(tokens.size()) + " tokens, dump declares " +
                          std::to_string(vocab.size));
    if (j.contains("eos_id") && j["eos_id"].get<std::uint32_t>() != vocab.eos_id)
        throw FormatError("manifest eos_id disagrees with the dump header");
    vocab.tokens = std::move(tokens);
    vocab.model_name = j.value("model", std::string{});
    vocab.word_initial_marker = j.value("word_initial_marker", vocab.word_initial_marker);
}

DistributionSet read_summary_tsv(std::istream& in) {
    using detail::parse_double;
    using detail::parse_int;

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty summary file", 1);
    auto header = detail::split_tabs(detail::strip_cr(line));
    if (header.size() < 4 || header[0] != "text_id" || header[1] != "word_index" || header[2] != "subword_index" ||
        header[3] != "surprisal_bits")
        throw ParseError("expected header 'text_id word_index subword_index surprisal_bits renyi_<a>_bits...'", 1);

    std::vector<Alpha> alphas;
    for (std::size_t c = 4; c < header.size(); ++c) {
        auto name = header[c];
        if (!name.starts_with("renyi_") || !name.ends_with("_bits"))
            throw ParseError("bad column '" + std::string(name) + "'", 1);
        name.remove_prefix(6);
        name.remove_suffix(5);
        try {
            alphas.push_back(Alpha::parse(name));
        } catch (const Error&) {
            throw ParseError("bad alpha in column '" + std::string(header[c]) + "'", 1);
        }
    }
    if (!std::is_sorted(alphas.begin(), alphas.end()) ||
        std::adjacent_find(alphas.begin(), alphas.end()) != alphas.end())
        throw ParseError("renyi columns must be in strictly increasing alpha order", 1);

    DistributionSet set;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto row = detail::strip_cr(line);
        if (row.empty()) continue;
        auto f = detail::split_tabs(row);
        if (f.size() != header.size()) throw ParseError("wrong number of fields", line_no);
        SubwordPosition p;
        auto t = parse_int<std::uint32_t>(f[0]);
        auto w = parse_int<std::uint32_t>(f[1]);
        auto s = parse_int<std::uint16_t>(f[2]);
        auto h = parse_double(f[3]);
        if (!t || !w || !s || !h || !std::isfinite(*h) || *h < 0) throw ParseError("bad position fields", line_no);
        p.text_id = *t;
        p.word_index = *w;
        p.subword_index = *s;
        PositionSummary summary;
        summary.surprisal_bits = *h;
        double previous = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            auto v = parse_double(f[4 + a]);
            if (!v || !std::isfinite(*v) || *v < 0) throw ParseError("bad entropy value", line_no);
            // Tolerates the rounding of a text dump.
            if (*v > previous + 1e-6)
                throw FormatError("line " + std::to_string(line_no) + ": Renyi entropies increase with alpha");
            previous = *v;
            summary.renyi_bits.emplace(alphas[a], *v);
        }
        p.summary = std::move(summary);
        set.positions.push_back(std::move(p));
    }
    return set;
}

DistributionSet read_summary_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open summary file " + path.string());
    return read_summary_tsv(in);
}

TokenizedCorpus tokenize_corpus(const Corpus& corpus, SubwordMode mode) {
    TokenizedCorpus out;
    auto& vocab = out.vocab;
    vocab.model_name = mode == SubwordMode::whitespace ? "ngram-whitespace" : "ngram-character";

    auto pieces_of = [&](const std::string& surface) {
        std::vector<std::string> pieces;
        if (mode == SubwordMode::whitespace) {
            pieces.push_back(vocab.word_initial_marker + surface);
            return pieces;
        }
        std::size_t i = 0;
        while (i < surface.size()) {
            std::size_t j = i + 1;
            while (j < surface.size() && (static_cast<unsigned char>(surface[j]) & 0xC0) == 0x80) ++j;
            auto cp = surface.substr(i, j - i);
            pieces.push_back(pieces.empty() ? vocab.word_initial_marker + cp : cp);
            i = j;
        }
        return pieces;
    };

    // Ids are assigned in sorted token order so the vocabulary does not depend on text order.
    std::set<std::string> inventory;
    for (const auto& text : corpus.texts)
        for (const auto& w : text.words)
            for (auto& piece : pieces_of(w.surface)) inventory.insert(std::move(piece));

    std::map<std::string, std::uint32_t, std::less<>> ids;
    for (const auto& tok : inventory) {
        ids.emplace(tok, static_cast<std::uint32_t>(vocab.tokens.size()));
        vocab.tokens.push_back(tok);
    }
    vocab.eos_id = static_cast<std::uint32_t>(vocab.tokens.size());
    vocab.tokens.push_back("</s>");
    vocab.size = static_cast<std::uint32_t>(vocab.tokens.size());

    for (const auto& text : corpus.texts) {
        TokenizedText tt;
        tt.text_id = text.text_id;
        for (const auto& w : text.words) {
            std::vector<std::uint32_t> word;
            for (const auto& piece : pieces_of(w.surface)) word.push_back(ids.at(piece));
            tt.words.push_back(std::move(word));
        }
        out.texts.push_back(std::move(tt));
    }
    return out;
}

}  // namespace antic
