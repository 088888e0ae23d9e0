#include "antic/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "antic/error.hpp"
#include "antic/random.hpp"

namespace antic {

namespace {

constexpr std::string_view kConsonants = "ptkbdgmnslrvz";
constexpr std::string_view kVowels = "aeiou";

// Platform-independent draws; the std distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    double normal() {
        if (spare_) {
            double v = *spare_;
            spare_.reset();
            return v;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Index drawn in proportion to weights[i] * allowed(i).
    template <typename Allowed>
    std::size_t categorical(const std::vector<double>& weights, Allowed allowed) {
        double total = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i)
            if (allowed(i)) total += weights[i];
        double u = uniform() * total;
        std::size_t last = weights.size();
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (!allowed(i)) continue;
            last = i;
            if (u < weights[i]) return i;
            u -= weights[i];
        }
        return last;
    }

private:
    SplitMix64 gen_;
    std::optional<double> spare_;
};

std::vector<std::string> syllables() {
    std::vector<std::string> out;
    for (char c : kConsonants)
        for (char v : kVowels) out.push_back(std::string{c, v});
    return out;
}

std::map<std::string, double> terms_to_json(const std::map<Term, double>& m) {
    std::map<std::string, double> out;
    for (const auto& [t, v] : m) out[t.name()] = v;
    return out;
}

std::map<Term, double> terms_from_json(const nlohmann::json& j) {
    std::map<Term, double> out;
    for (const auto& [name, v] : j.items()) out[Term::parse(name)] = v.get<double>();
    return out;
}

double linear_part(const std::map<Term, double>& phi, const Text& text, std::size_t i, const WordInfoTable& infos) {
    double mu = 0.0;
    // lags past the text start count as 0
    for (const auto& [t, w] : phi) mu += w * term_value(t, text, i, infos).value_or(0.0);
    return mu;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("noise_sigma must be positive");
    if (n_texts == 0 || words_per_text == 0) throw ConfigError("need at least one text with one word");
    if (readers == 0) throw ConfigError("need at least one reader");
    auto check = [](const std::map<Term, double>& m) {
        for (const auto& [t, v] : m) {
            t.validate();
            if (!std::isfinite(v)) throw ConfigError("coefficient for " + t.name() + " is not finite");
        }
    };
    check(true_phi);
    if (skip_model) {
        check(*skip_model);
        check_policy(CorpusFormat::eye_tracking, skip_policy);
    }
    const auto& s = source;
    if (s.initial_units == 0) throw ConfigError("need at least one word-initial unit");
    if (s.initial_units + s.continuation_units > syllables().size())
        throw ConfigError("at most " + std::to_string(syllables().size()) + " subword units");
    if (s.max_word_subwords == 0) throw ConfigError("max_word_subwords must be at least 1");
    if (s.lexicon_size == 0 || s.training_words == 0) throw ConfigError("lexicon and training text must be non-empty");
    if (s.successor_bias < 0.0 || s.successor_bias > 1.0) throw ConfigError("successor_bias must lie in [0, 1]");
}

SyntheticData generate(const GeneratorConfig& config) {
    config.validate();
    const auto& src = config.source;
    Rng rng(config.seed);

    // Subword inventory: initial units carry the marker, then continuation units, then EOS.
    Vocabulary vocab;
    vocab.model_name = "synthetic-ngram";
    const auto syl = syllables();
    for (std::uint32_t i = 0; i < src.initial_units; ++i) vocab.tokens.push_back(vocab.word_initial_marker + syl[i]);
    for (std::uint32_t i = 0; i < src.continuation_units; ++i) vocab.tokens.push_back(syl[src.initial_units + i]);
    vocab.eos_id = static_cast<std::uint32_t>(vocab.tokens.size());
    vocab.tokens.push_back("</s>");
    vocab.size = static_cast<std::uint32_t>(vocab.tokens.size());
    const std::uint32_t n_initial = src.initial_units;

    // Lexicon of distinct subword sequences.
    std::set<std::vector<std::uint32_t>> seen;
    std::vector<std::vector<std::uint32_t>> lexicon;
    const std::uint32_t max_cont = src.continuation_units ? src.max_word_subwords - 1 : 0;
    for (std::size_t attempts = 0; lexicon.size() < src.lexicon_size && attempts < 100 * src.lexicon_size; ++attempts) {
        std::vector<std::uint32_t> w{static_cast<std::uint32_t>(rng.below(n_initial))};
        const std::size_t extra = rng.below(max_cont + 1);
        for (std::size_t k = 0; k < extra; ++k)
            w.push_back(n_initial + static_cast<std::uint32_t>(rng.below(src.continuation_units)));
        if (seen.insert(w).second) lexicon.push_back(std::move(w));
    }

    // Word-level Markov source: Zipfian base rate mixed with preferred successors.
    const std::size_t nw = lexicon.size();
    std::vector<double> zipf(nw);
    for (std::size_t r = 0; r < nw; ++r) zipf[r] = std::pow(static_cast<double>(r + 1), -src.zipf_exponent);
    std::vector<std::vector<double>> next(nw, zipf);
    for (auto& row : next) {
        // each word gets its own predictability, uniform in [0, successor_bias]
        const double bias = src.successor_bias * rng.uniform();
        double z = 0.0;
        for (double v : row) z += v;
        for (double& v : row) v *= (1.0 - bias) / z;
        for (std::uint32_t k = 0; k < src.preferred_successors; ++k)
            row[rng.below(nw)] += bias / std::max<std::uint32_t>(src.preferred_successors, 1);
    }
    auto any = [](std::size_t) { return true; };
    std::vector<std::vector<std::uint32_t>> training;
    for (std::uint32_t done = 0; done < src.training_words;) {
        std::vector<std::uint32_t> seq;
        std::size_t w = rng.categorical(zipf, any);
        for (std::uint32_t k = 0; k < 100 && done < src.training_words; ++k, ++done) {
            seq.insert(seq.end(), lexicon[w].begin(), lexicon[w].end());
            w = rng.categorical(next[w], any);
        }
        training.push_back(std::move(seq));
    }

    NgramModel model(src.ngram, vocab.size);
    model.train(training);

    // Sample texts from the trained model. EOS is never drawn, a text starts
    // with a word-initial unit, and words are cut at max_word_subwords.
    const std::size_t context = src.ngram.order - 1;
    std::vector<TokenizedText> texts;
    for (std::uint32_t t = 0; t < config.n_texts; ++t) {
        TokenizedText text;
        text.text_id = t;
        std::vector<std::uint32_t> history;
        while (true) {
            std::span<const std::uint32_t> tail(history);
            if (tail.size() > context) tail = tail.last(context);
            const auto probs = model.distribution(tail);
            const bool must_start = text.words.empty() || text.words.back().size() >= src.max_word_subwords;
            const auto id = static_cast<std::uint32_t>(rng.categorical(probs, [&](std::size_t i) {
                return i != vocab.eos_id && (!must_start || i < n_initial);
            }));
            if (id < n_initial) {
                if (text.words.size() == config.words_per_text) break;
                text.words.emplace_back();
            }
            text.words.back().push_back(id);
            history.push_back(id);
        }
        texts.push_back(std::move(text));
    }

    SyntheticData data;
    data.distributions.vocab = vocab;
    data.distributions.positions = ngram_distributions(model, texts);

    auto& corpus = data.corpus;
    corpus.format = config.skip_model ? CorpusFormat::eye_tracking : CorpusFormat::self_paced;
    corpus.policy = config.skip_model ? config.skip_policy : SkipPolicy::not_applicable;
    for (const auto& tt : texts) {
        Text text;
        text.text_id = tt.text_id;
        for (std::size_t w = 0; w < tt.words.size(); ++w) {
            WordObservation obs;
            obs.text_id = tt.text_id;
            obs.word_index = static_cast<std::uint32_t>(w);
            for (auto id : tt.words[w]) {
                const auto& tok = vocab.tokens[id];
                obs.surface += id < n_initial ? tok.substr(vocab.word_initial_marker.size()) : tok;
            }
            obs.length_chars = utf8_length(obs.surface);
            text.words.push_back(std::move(obs));
        }
        corpus.texts.push_back(std::move(text));
    }
    assign_unigram_logprobs(corpus, unigram_logprobs(corpus, nullptr));

    TermList used;
    for (const auto& [t, v] : config.true_phi) used.push_back(t);
    if (config.skip_model)
        for (const auto& [t, v] : *config.skip_model) used.push_back(t);
    auto alphas = alphas_of(used);
    if (alphas.empty()) alphas.push_back(Alpha::shannon());
    data.infos = compute_word_infos(data.distributions.positions, alphas);

    for (auto& text : corpus.texts) {
        for (std::size_t i = 0; i < text.words.size(); ++i) {
            const double mu = linear_part(config.true_phi, text, i, data.infos);
            double p_skip = 0.0;
            if (config.skip_model) p_skip = 1.0 / (1.0 + std::exp(-linear_part(*config.skip_model, text, i, data.infos)));
            auto& word = text.words[i];
            for (std::uint32_t r = 0; r < config.readers; ++r) {
                ReaderMeasure m;
                m.reader_id = "r" + std::to_string(r);
                if (config.skip_model) {
                    m.skipped = rng.uniform() < p_skip;
                    if (*m.skipped) {
                        m.rt_ms = 0.0;
                        word.measures.push_back(std::move(m));
                        continue;
                    }
                }
                m.rt_ms = std::max(0.0, mu + config.noise_sigma * rng.normal());
                word.measures.push_back(std::move(m));
            }
            aggregate(word, corpus.policy);
        }
    }
    return data;
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data, const GeneratorConfig& config) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "corpus.tsv");
        if (!out) throw Error("cannot write " + (dir / "corpus.tsv").string());
        write_corpus_tsv(out, data.corpus);
    }
    write_fulldist(dir / "dists.fulldist", data.distributions);
    std::ofstream truth(dir / "truth.json");
    if (!truth) throw Error("cannot write " + (dir / "truth.json").string());
    truth << to_json(config).dump(2) << '\n';
}

nlohmann::json to_json(const GeneratorConfig& c) {
    nlohmann::json j;
    j["true_phi"] = terms_to_json(c.true_phi);
    j["noise_sigma"] = c.noise_sigma;
    j["n_texts"] = c.n_texts;
    j["words_per_text"] = c.words_per_text;
    j["readers"] = c.readers;
    if (c.skip_model) {
        j["skip_model"] = terms_to_json(*c.skip_model);
        j["skip_policy"] = std::string(to_string(c.skip_policy));
    }
    j["seed"] = c.seed;
    const auto& s = c.source;
    j["source"] = {
        {"initial_units", s.initial_units},
        {"continuation_units", s.continuation_units},
        {"lexicon_size", s.lexicon_size},
        {"max_word_subwords", s.max_word_subwords},
        {"zipf_exponent", s.zipf_exponent},
        {"successor_bias", s.successor_bias},
        {"preferred_successors", s.preferred_successors},
        {"training_words", s.training_words},
        {"ngram_order", s.ngram.order},
        {"ngram_weights", s.ngram.weights},
    };
    return j;
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    try {
        if (j.contains("true_phi")) c.true_phi = terms_from_json(j.at("true_phi"));
        c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
        c.n_texts = j.value("n_texts", c.n_texts);
        c.words_per_text = j.value("words_per_text", c.words_per_text);
        c.readers = j.value("readers", c.readers);
        if (j.contains("skip_model")) c.skip_model = terms_from_json(j.at("skip_model"));
        if (j.contains("skip_policy")) c.skip_policy = parse_skip_policy(j.at("skip_policy").get<std::string>());
        c.seed = j.value("seed", c.seed);
        if (j.contains("source")) {
            const auto& s = j.at("source");
            auto& d = c.source;
            d.initial_units = s.value("initial_units", d.initial_units);
            d.continuation_units = s.value("continuation_units", d.continuation_units);
            d.lexicon_size = s.value("lexicon_size", d.lexicon_size);
            d.max_word_subwords = s.value("max_word_subwords", d.max_word_subwords);
            d.zipf_exponent = s.value("zipf_exponent", d.zipf_exponent);
            d.successor_bias = s.value("successor_bias", d.successor_bias);
            d.preferred_successors = s.value("preferred_successors", d.preferred_successors);
            d.training_words = s.value("training_words", d.training_words);
            d.ngram.order = s.value("ngram_order", d.ngram.order);
            d.ngram.weights = s.value("ngram_weights", d.ngram.weights);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("generator config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace antic
