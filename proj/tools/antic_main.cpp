// antic: surprisal / entropy reading-time analysis.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "antic/corpus.hpp"
#include "antic/error.hpp"
#include "antic/infotheory.hpp"
#include "antic/lm.hpp"
#include "antic/pipeline.hpp"
#include "antic/synth.hpp"

namespace {

using namespace antic;

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

std::vector<Alpha> parse_alphas(const std::vector<std::string>& items) {
    std::vector<Alpha> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ','))
            if (!part.empty()) out.push_back(Alpha::parse(part));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    return out;
}

struct IngestArgs {
    std::string corpus, format = "eye_tracking", policy, frequencies, out;
};

void cmd_ingest(const IngestArgs& a) {
    const auto format = parse_corpus_format(a.format);
    CorpusSource src;
    src.format = format;
    const auto policy = effective_policy(src, a.policy.empty() ? std::nullopt : std::optional(parse_skip_policy(a.policy)));
    auto corpus = ingest_corpus(a.corpus, format, policy);
    FrequencyTable table;
    if (!a.frequencies.empty()) table = read_frequencies(std::filesystem::path(a.frequencies));
    assign_unigram_logprobs(corpus, unigram_logprobs(corpus, a.frequencies.empty() ? nullptr : &table));
    std::size_t with_rt = 0;
    for (const auto& t : corpus.texts)
        for (const auto& w : t.words) with_rt += w.mean_rt_ms.has_value();
    std::cerr << corpus.texts.size() << " texts, " << corpus.word_count() << " words, " << with_rt
              << " with a mean RT\n";
    if (a.out.empty() || a.out == "-") {
        write_aggregates_tsv(std::cout, corpus);
    } else {
        auto out = open_out(a.out);
        write_aggregates_tsv(out, corpus);
    }
}

struct EntropyArgs {
    std::string fulldist, summary, out;
    std::vector<std::string> alphas;
};

void cmd_entropy(const EntropyArgs& a) {
    if (a.fulldist.empty() == a.summary.empty()) throw ConfigError("give exactly one of --fulldist and --summary");
    auto alphas = a.alphas.empty() ? default_alpha_grid() : parse_alphas(a.alphas);
    const auto set = a.fulldist.empty() ? read_summary_tsv(std::filesystem::path(a.summary))
                                        : read_fulldist(a.fulldist);
    const auto table = compute_word_infos(set.positions, alphas);
    if (table.infinite_surprisal_words)
        std::cerr << "warning: " << table.infinite_surprisal_words << " words with infinite surprisal\n";
    auto out = open_out(a.out);
    write_word_infos_tsv(out, table);
}

struct RunArgs {
    std::string config, out, policy;
    std::vector<std::string> experiments, alphas;
    std::optional<std::uint64_t> seed, fold_seed;
    std::optional<std::size_t> permutations;
    bool sweep = false;
    bool grouped = false;
};

void cmd_run(const RunArgs& a, bool sweep_only) {
    auto config = read_pipeline_config(a.config);
    if (!a.experiments.empty()) config.experiments = a.experiments;
    if (sweep_only) config.experiments.clear();
    if (a.sweep || sweep_only) config.alpha_sweep = true;
    if (!a.alphas.empty()) config.alphas = parse_alphas(a.alphas);
    if (!a.policy.empty()) config.skip_policy = parse_skip_policy(a.policy);
    if (a.seed) config.options.seed = *a.seed;
    if (a.fold_seed) config.options.fold_seed = *a.fold_seed;
    if (a.permutations) config.options.permutations = *a.permutations;
    if (a.grouped) config.options.grouped_folds = true;
    if (!a.out.empty()) config.output_dir = a.out;
    for (const auto& p : run_pipeline(config, &std::cerr)) std::cout << p.string() << '\n';
}

struct SynthArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> texts, words, readers;
    std::optional<double> sigma;
    std::vector<std::string> phi, skip;
};

std::map<Term, double> parse_assignments(const std::vector<std::string>& items) {
    std::map<Term, double> out;
    for (const auto& item : items) {
        auto eq = item.rfind('=');
        if (eq == std::string::npos) throw ConfigError("expected term=value, got '" + item + "'");
        const std::string value = item.substr(eq + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != value.size()) throw ConfigError("bad value in '" + item + "'");
        out[Term::parse(item.substr(0, eq))] = v;
    }
    return out;
}

void cmd_synth(const SynthArgs& a) {
    GeneratorConfig c;
    if (!a.config.empty()) c = generator_config_from_json(read_json(a.config));
    if (a.seed) c.seed = *a.seed;
    if (a.texts) c.n_texts = *a.texts;
    if (a.words) c.words_per_text = *a.words;
    if (a.readers) c.readers = *a.readers;
    if (a.sigma) c.noise_sigma = *a.sigma;
    if (!a.phi.empty()) c.true_phi = parse_assignments(a.phi);
    if (!a.skip.empty()) c.skip_model = parse_assignments(a.skip);
    if (c.true_phi.empty()) c.true_phi = {{Term::intercept(), 200.0}};
    const auto data = generate(c);
    write_synthetic(a.out, data, c);
    std::cerr << "wrote " << data.corpus.word_count() << " words to " << a.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surprisal and contextual entropy as predictors of reading behaviour"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Validate a corpus TSV and print per-word aggregates");
    c_ingest->add_option("corpus", ingest.corpus, "Corpus TSV")->required()->check(CLI::ExistingFile);
    c_ingest->add_option("--format", ingest.format, "eye_tracking or self_paced");
    c_ingest->add_option("--skip-policy", ingest.policy, "zero or exclude (eye tracking)");
    c_ingest->add_option("--frequencies", ingest.frequencies, "surface<TAB>count table for unigram estimates");
    c_ingest->add_option("-o,--out", ingest.out, "Output TSV (default stdout)");

    EntropyArgs entropy;
    auto* c_entropy = app.add_subcommand("entropy", "Compute the word surprisal/entropy cache");
    c_entropy->add_option("--fulldist", entropy.fulldist, "FULLDIST dump");
    c_entropy->add_option("--summary", entropy.summary, "SUMMARY TSV");
    c_entropy->add_option("--alpha", entropy.alphas, "Renyi orders (comma separated, 'inf' allowed)");
    c_entropy->add_option("-o,--out", entropy.out, "Output TSV")->required();

    RunArgs run;
    auto add_run_options = [&](CLI::App* c) {
        c->add_option("--config", run.config, "Pipeline JSON config")->required()->check(CLI::ExistingFile);
        c->add_option("--out", run.out, "Output directory");
        c->add_option("--alpha", run.alphas, "Alpha grid override");
        c->add_option("--skip-policy", run.policy, "zero or exclude");
        c->add_option("--seed", run.seed, "Permutation seed");
        c->add_option("--fold-seed", run.fold_seed, "Fold assignment seed");
        c->add_option("--permutations", run.permutations, "Monte Carlo resamples");
        c->add_flag("--grouped-folds", run.grouped, "Keep whole texts in one fold");
    };
    auto* c_run = app.add_subcommand("run", "Run experiments from a config");
    add_run_options(c_run);
    c_run->add_option("--experiment", run.experiments, "Experiment id, optionally id:alpha");
    c_run->add_flag("--alpha-sweep", run.sweep, "Also emit the alpha sweep table");
    auto* c_sweep = app.add_subcommand("sweep", "Only the alpha sweep");
    add_run_options(c_sweep);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic corpus and FULLDIST dump");
    c_synth->add_option("--config", synth.config, "Generator JSON config");
    c_synth->add_option("--out", synth.out, "Output directory")->required();
    c_synth->add_option("--seed", synth.seed, "Seed");
    c_synth->add_option("--texts", synth.texts, "Number of texts");
    c_synth->add_option("--words", synth.words, "Words per text");
    c_synth->add_option("--readers", synth.readers, "Readers per word");
    c_synth->add_option("--sigma", synth.sigma, "Noise sd in ms");
    c_synth->add_option("--phi", synth.phi, "Generating coefficient, e.g. surprisal@t=3");
    c_synth->add_option("--skip", synth.skip, "Skip-model coefficient, e.g. length@t=-0.5");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*c_ingest) cmd_ingest(ingest);
        if (*c_entropy) cmd_entropy(entropy);
        if (*c_run) cmd_run(run, false);
        if (*c_sweep) cmd_run(run, true);
        if (*c_synth) cmd_synth(synth);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
