#include "antic/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include "antic/error.hpp"
#include "antic/random.hpp"
#include "tsv.hpp"

namespace antic {

namespace {

using detail::format_double;
using detail::format_fixed;

// Re-throws with the stage prefixed, keeping the error category.
template <typename F>
auto in_stage(const std::string& stage, F&& f) {
    try {
        return f();
    } catch (const ParseError& e) {
        throw ValidationError(stage + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(stage + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(stage + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(stage + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(stage + ": " + e.what());
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::vector<Alpha> parse_alpha_list(const nlohmann::json& j) {
    std::vector<Alpha> out;
    for (const auto& v : j) out.push_back(v.is_string() ? Alpha::parse(v.get<std::string>()) : Alpha(v.get<double>()));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string fit_key(const TermList& spec, const TermList& rows, Response response, ModelKind model) {
    std::set<std::string> gate;
    for (const auto& t : rows) gate.insert(t.name());
    std::string key = std::string(to_string(response)) + (model == ModelKind::linear ? "/linear/" : "/logistic/");
    key += spec_label(spec) + " |";
    for (const auto& g : gate) key += " " + g;
    return key;
}

bool has_entropy_at(const TermList& spec, std::optional<Alpha> alpha) {
    bool any = false;
    for (const auto& t : spec) {
        if (!t.alpha) continue;
        if (!alpha || *t.alpha != *alpha) return false;
        any = true;
    }
    return alpha ? any : !any;
}

std::string file_stem(const std::string& experiment) {
    std::string out;
    for (char c : experiment) out += (c == ':') ? '_' : c;
    return out;
}

struct FileLedger {
    std::vector<std::filesystem::path> written;
    bool keep = false;

    ~FileLedger() {
        if (keep) return;
        for (const auto& p : written) {
            std::error_code ec;
            std::filesystem::remove(p, ec);
        }
    }

    std::ofstream open(const std::filesystem::path& path) {
        written.push_back(path);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path.string());
        return out;
    }
};

}  // namespace

void PipelineConfig::validate() const {
    if (corpora.empty()) throw ConfigError("no corpora configured");
    if (alphas.empty()) throw ConfigError("alpha grid is empty");
    if (experiments.empty() && !alpha_sweep) throw ConfigError("nothing to run: no experiments and no alpha sweep");
    if (options.permutations == 0) throw ConfigError("permutations must be positive");
    if (!(options.fdr > 0.0 && options.fdr < 1.0)) throw ConfigError("fdr must lie in (0, 1)");
    std::set<std::string> names;
    for (const auto& c : corpora) {
        if (!names.insert(c.name).second) throw ConfigError("duplicate corpus name '" + c.name + "'");
        if (!std::filesystem::exists(c.path)) throw ConfigError("corpus file not found: " + c.path.string());
        if (c.frequencies && !std::filesystem::exists(*c.frequencies))
            throw ConfigError("frequency file not found: " + c.frequencies->string());
        if (c.word_infos) {
            if (!std::filesystem::exists(*c.word_infos))
                throw ConfigError("word info cache not found: " + c.word_infos->string());
        } else if (c.distributions.kind != DistributionSource::Kind::ngram &&
                   !std::filesystem::exists(c.distributions.path)) {
            throw ConfigError("distribution file not found: " + c.distributions.path.string());
        }
        check_policy(c.format, effective_policy(c, skip_policy));
    }
    for (const auto& id : experiments) {
        const auto e = parse_experiment(id);
        for (auto a : e.alphas)
            if (std::find(alphas.begin(), alphas.end(), a) == alphas.end())
                throw ConfigError("experiment " + id + " needs alpha = " + a.to_string() + ", which is not in the grid");
    }
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
    PipelineConfig c;
    try {
        for (const auto& cj : j.at("corpora")) {
            CorpusSource s;
            s.name = cj.at("name").get<std::string>();
            s.path = resolve(base, cj.at("path").get<std::string>());
            s.format = parse_corpus_format(cj.at("format").get<std::string>());
            if (cj.contains("skip_policy")) s.skip_policy = parse_skip_policy(cj.at("skip_policy").get<std::string>());
            if (cj.contains("frequencies")) s.frequencies = resolve(base, cj.at("frequencies").get<std::string>());
            if (cj.contains("word_infos")) s.word_infos = resolve(base, cj.at("word_infos").get<std::string>());
            if (cj.contains("distributions")) {
                const auto& d = cj.at("distributions");
                if (d.contains("fulldist")) {
                    s.distributions.kind = DistributionSource::Kind::fulldist;
                    s.distributions.path = resolve(base, d.at("fulldist").get<std::string>());
                } else if (d.contains("summary")) {
                    s.distributions.kind = DistributionSource::Kind::summary;
                    s.distributions.path = resolve(base, d.at("summary").get<std::string>());
                } else if (d.contains("ngram")) {
                    const auto& n = d.at("ngram");
                    s.distributions.kind = DistributionSource::Kind::ngram;
                    s.distributions.ngram.order = n.value("order", s.distributions.ngram.order);
                    s.distributions.ngram.weights = n.value("weights", s.distributions.ngram.weights);
                    const auto mode = n.value("subwords", std::string("character"));
                    if (mode == "character") s.distributions.subwords = SubwordMode::character;
                    else if (mode == "whitespace") s.distributions.subwords = SubwordMode::whitespace;
                    else throw ConfigError("unknown subword mode '" + mode + "'");
                } else {
                    throw ConfigError("distributions needs one of fulldist, summary, ngram");
                }
            } else if (!s.word_infos) {
                throw ConfigError("corpus '" + s.name + "' has neither distributions nor word_infos");
            }
            c.corpora.push_back(std::move(s));
        }
        if (j.contains("alphas")) c.alphas = parse_alpha_list(j.at("alphas"));
        if (j.contains("skip_policy")) c.skip_policy = parse_skip_policy(j.at("skip_policy").get<std::string>());
        c.experiments = j.value("experiments", c.experiments);
        c.alpha_sweep = j.value("alpha_sweep", c.alpha_sweep);
        c.options.fold_seed = j.value("fold_seed", c.options.fold_seed);
        c.options.seed = j.value("seed", c.options.seed);
        c.options.permutations = j.value("permutations", c.options.permutations);
        c.options.grouped_folds = j.value("grouped_folds", c.options.grouped_folds);
        c.options.fdr = j.value("fdr", c.options.fdr);
        if (j.contains("output_dir")) c.output_dir = resolve(base, j.at("output_dir").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("pipeline config: ") + e.what());
    }
    return c;
}

PipelineConfig read_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return pipeline_config_from_json(j, path.parent_path());
}

SkipPolicy effective_policy(const CorpusSource& source, std::optional<SkipPolicy> override_policy) {
    if (source.format == CorpusFormat::self_paced) return SkipPolicy::not_applicable;
    if (override_policy) return *override_policy;
    return source.skip_policy.value_or(SkipPolicy::include_as_zero);
}

PreparedCorpus prepare_corpus(const CorpusSource& source, std::span<const Alpha> alphas,
                              std::optional<SkipPolicy> override_policy) {
    PreparedCorpus p;
    p.name = source.name;
    const std::string where = "corpus '" + source.name + "'";
    p.corpus = in_stage(where + ": ingest", [&] {
        return ingest_corpus(source.path, source.format, effective_policy(source, override_policy));
    });
    in_stage(where + ": unigram", [&] {
        FrequencyTable table;
        if (source.frequencies) table = read_frequencies(*source.frequencies);
        assign_unigram_logprobs(p.corpus, unigram_logprobs(p.corpus, source.frequencies ? &table : nullptr));
        return 0;
    });

    p.infos = in_stage(where + ": entropy", [&] {
        if (source.word_infos) {
            std::ifstream in(*source.word_infos);
            if (!in) throw ConfigError("cannot open " + source.word_infos->string());
            auto table = read_word_infos_tsv(in);
            for (auto a : alphas)
                if (std::find(table.alphas.begin(), table.alphas.end(), a) == table.alphas.end())
                    throw ConfigError("word info cache lacks alpha = " + a.to_string());
            return table;
        }
        const auto& d = source.distributions;
        std::vector<SubwordPosition> positions;
        switch (d.kind) {
            case DistributionSource::Kind::fulldist: positions = read_fulldist(d.path).positions; break;
            case DistributionSource::Kind::summary: positions = read_summary_tsv(d.path).positions; break;
            case DistributionSource::Kind::ngram: {
                auto tok = tokenize_corpus(p.corpus, d.subwords);
                std::vector<std::vector<std::uint32_t>> training;
                for (const auto& t : tok.texts) {
                    auto& seq = training.emplace_back();
                    for (const auto& w : t.words) seq.insert(seq.end(), w.begin(), w.end());
                }
                NgramModel model(d.ngram, tok.vocab.size);
                model.train(training);
                positions = ngram_distributions(model, tok.texts);
                break;
            }
        }
        return compute_word_infos(positions, alphas);
    });

    for (const auto& text : p.corpus.texts) {
        for (const auto& w : text.words) {
            if (!p.infos.find({w.text_id, w.word_index}))
                throw ValidationError(where + ": no distribution for text " + std::to_string(w.text_id) + " word " +
                                      std::to_string(w.word_index) + " ('" + w.surface + "')");
        }
    }
    for (const auto& [key, info] : p.infos.words) {
        if (!p.corpus.find(key.text_id, key.word_index))
            throw ValidationError(where + ": distributions cover text " + std::to_string(key.text_id) + " word " +
                                  std::to_string(key.word_index) + ", which the corpus lacks");
    }
    return p;
}

ComparisonEngine::ComparisonEngine(const PreparedCorpus& data, RunOptions options)
    : data_(data), options_(options) {}

const FitResult& ComparisonEngine::fit(const TermList& spec, const TermList& row_terms, Response response,
                                       ModelKind model) {
    const auto key = fit_key(spec, row_terms, response, model);
    auto it = fits_.find(key);
    if (it != fits_.end()) return it->second.fit;
    auto matrix = build_matrix(data_.corpus, data_.infos, spec, response, &row_terms);
    const auto plan = options_.grouped_folds ? FoldPlan::grouped(matrix.rows, options_.fold_seed)
                                             : FoldPlan::make(matrix.row_count(), options_.fold_seed);
    CachedFit cached{spec, response, cross_validate(matrix, model, plan)};
    return fits_.emplace(key, std::move(cached)).first->second.fit;
}

ComparisonReport ComparisonEngine::compare(const ExperimentPair& pair, Response response, ModelKind model,
                                           std::string_view family) {
    const auto rows = concat(pair.target, pair.baseline);
    const auto& target = fit(pair.target, rows, response, model);
    const auto& baseline = fit(pair.baseline, rows, response, model);
    last_diffs_ = paired_differences(target, baseline);

    ComparisonReport r;
    r.dataset = data_.name;
    r.label = pair.label;
    r.group = pair.group;
    r.column = pair.column;
    r.target_spec = spec_label(pair.target);
    r.baseline_spec = spec_label(pair.baseline);
    r.rows = last_diffs_.size();
    r.delta_llh = delta_llh(target, baseline);
    const auto seed = derive_seed(options_.seed, fnv1a(data_.name + "/" + std::string(family) + "/" + pair.label));
    r.p_value = paired_permutation_test(last_diffs_, options_.permutations, seed);
    return r;
}

std::vector<ComparisonReport> run_experiment(const Experiment& e, std::vector<ComparisonEngine>& engines, double fdr,
                                             std::ostream* log) {
    std::vector<ComparisonReport> table;
    for (auto& engine : engines) {
        if (e.response == Response::skip_ratio && engine.data().corpus.format != CorpusFormat::eye_tracking) {
            if (log) *log << e.id << ": skipping self-paced corpus '" << engine.data().name << "'\n";
            continue;
        }
        for (const auto& pair : e.pairs) {
            table.push_back(in_stage(e.id + " on '" + engine.data().name + "', " + pair.label,
                                     [&] { return engine.compare(pair, e.response, e.model, e.id); }));
        }
    }
    if (table.empty()) throw ConfigError(e.id + ": no eligible corpus");
    classify(table, fdr);
    return table;
}

std::vector<SweepRow> run_alpha_sweep(std::vector<ComparisonEngine>& engines, std::span<const Alpha> alphas,
                                      double fdr) {
    std::vector<SweepRow> rows;
    for (auto& engine : engines) {
        for (auto a : alphas) {
            for (const auto& pair : alpha_sweep_pairs(a)) {
                SweepRow row;
                row.alpha = a;
                row.report = in_stage("alpha sweep on '" + engine.data().name + "', " + pair.label, [&] {
                    return engine.compare(pair, Response::reading_time, ModelKind::linear, "sweep");
                });
                const auto& d = engine.last_differences();
                const double n = static_cast<double>(d.size());
                double ss = 0.0;
                for (double v : d) ss += (v - row.report.delta_llh) * (v - row.report.delta_llh);
                const double se = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
                row.ci_low = row.report.delta_llh - 1.96 * se;
                row.ci_high = row.report.delta_llh + 1.96 * se;
                rows.push_back(std::move(row));
            }
        }
    }
    std::vector<ComparisonReport> family;
    for (const auto& r : rows) family.push_back(r.report);
    classify(family, fdr);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].report = family[i];
    return rows;
}

void write_sweep_tsv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "dataset\talpha\tadded\tdelta_llh_1e-2_nats\tci95_low\tci95_high\tstars\tcolor\tp_value\tp_adjusted\trows\t"
           "target\tbaseline\n";
    for (const auto& row : rows) {
        const auto& r = row.report;
        out << r.dataset << '\t' << row.alpha.to_string() << '\t' << r.column << '\t'
            << format_fixed(100.0 * r.delta_llh, 3) << '\t' << format_fixed(100.0 * row.ci_low, 3) << '\t'
            << format_fixed(100.0 * row.ci_high, 3) << '\t' << r.stars << '\t' << to_string(r.significance) << '\t'
            << format_double(r.p_value) << '\t' << format_double(r.p_adjusted) << '\t' << r.rows << '\t'
            << r.target_spec << '\t' << r.baseline_spec << '\n';
    }
}

void write_effects_tsv(std::ostream& out, std::span<const ComparisonEngine> engines, std::span<const Alpha> alphas) {
    out << "dataset\talpha\tmodel\tterm\tfold_mean\tfold_sd\tfull_fit\tmean_heldout_llh\n";
    std::vector<std::optional<Alpha>> keys{std::nullopt};
    keys.insert(keys.end(), alphas.begin(), alphas.end());
    for (const auto& engine : engines) {
        for (const auto& key : keys) {
            // Best reading-time model whose entropy terms all use this alpha.
            const ComparisonEngine::CachedFit* best = nullptr;
            for (const auto& [k, c] : engine.fits()) {
                if (c.response != Response::reading_time || !has_entropy_at(c.spec, key)) continue;
                if (!best || c.fit.mean_heldout_llh() > best->fit.mean_heldout_llh()) best = &c;
            }
            if (!best) continue;
            const auto& f = best->fit;
            const std::size_t folds = f.fold_coefficients.size();
            for (std::size_t c = 0; c < f.column_names.size(); ++c) {
                const auto i = static_cast<Eigen::Index>(c);
                double mean = 0.0;
                for (const auto& phi : f.fold_coefficients) mean += phi(i);
                mean /= static_cast<double>(folds);
                double ss = 0.0;
                for (const auto& phi : f.fold_coefficients) ss += (phi(i) - mean) * (phi(i) - mean);
                const double sd = folds > 1 ? std::sqrt(ss / static_cast<double>(folds - 1)) : 0.0;
                out << engine.data().name << '\t' << (key ? key->to_string() : "-") << '\t' << spec_label(best->spec)
                    << '\t' << f.column_names[c] << '\t' << format_double(mean) << '\t' << format_double(sd) << '\t'
                    << format_double(f.coefficients(i)) << '\t' << format_double(f.mean_heldout_llh()) << '\n';
            }
        }
    }
}

void write_spearman_tsv(std::ostream& out, std::span<const PreparedCorpus> corpora, std::span<const Alpha> alphas) {
    out << "dataset\talpha\tspearman_rho\twords\n";
    for (const auto& p : corpora) {
        for (auto a : alphas) {
            std::vector<double> h, e;
            for (const auto& [key, info] : p.infos.words) {
                if (!info.surprisal_bits) continue;
                h.push_back(*info.surprisal_bits);
                e.push_back(info.entropy_bits.at(a));
            }
            out << p.name << '\t' << a.to_string() << '\t';
            try {
                out << format_double(spearman(h, e));
            } catch (const DomainError&) {
                out << "nan";
            } catch (const ContractError&) {
                out << "nan";
            }
            out << '\t' << h.size() << '\n';
        }
    }
}

std::vector<std::filesystem::path> run_pipeline(const PipelineConfig& config, std::ostream* log) {
    in_stage("config", [&] {
        config.validate();
        return 0;
    });
    std::vector<Experiment> experiments;
    for (const auto& id : config.experiments) experiments.push_back(parse_experiment(id));

    std::vector<PreparedCorpus> corpora;
    corpora.reserve(config.corpora.size());
    for (const auto& source : config.corpora) {
        if (log) *log << "preparing corpus '" << source.name << "'\n";
        corpora.push_back(prepare_corpus(source, config.alphas, config.skip_policy));
        if (log && corpora.back().infos.infinite_surprisal_words)
            *log << source.name << ": " << corpora.back().infos.infinite_surprisal_words
                 << " words with infinite surprisal left out\n";
    }
    std::vector<ComparisonEngine> engines;
    for (const auto& p : corpora) engines.emplace_back(p, config.options);

    std::filesystem::create_directories(config.output_dir);
    FileLedger files;
    const auto& dir = config.output_dir;

    for (std::size_t i = 0; i < experiments.size(); ++i) {
        const auto& e = experiments[i];
        if (log) *log << "running " << config.experiments[i] << " (" << e.pairs.size() << " pairs)\n";
        auto table = run_experiment(e, engines, config.options.fdr, log);
        const auto stem = file_stem(config.experiments[i]);
        {
            auto out = files.open(dir / (stem + ".tsv"));
            write_reports_tsv(out, table);
        }
        nlohmann::json j;
        j["experiment"] = config.experiments[i];
        j["model"] = e.model == ModelKind::linear ? "linear" : "logistic";
        j["response"] = std::string(to_string(e.response));
        j["rows"] = nlohmann::json::array();
        for (const auto& r : table) j["rows"].push_back(to_json(r));
        auto out = files.open(dir / (stem + ".json"));
        out << j.dump(2) << '\n';
    }

    if (config.alpha_sweep) {
        if (log) *log << "running alpha sweep over " << config.alphas.size() << " orders\n";
        const auto rows = run_alpha_sweep(engines, config.alphas, config.options.fdr);
        auto out = files.open(dir / "alpha_sweep.tsv");
        write_sweep_tsv(out, rows);
    }
    {
        auto out = files.open(dir / "effects.tsv");
        write_effects_tsv(out, engines, config.alphas);
    }
    {
        auto out = files.open(dir / "spearman.tsv");
        write_spearman_tsv(out, corpora, config.alphas);
    }
    {
        nlohmann::json fits = nlohmann::json::array();
        for (const auto& engine : engines) {
            for (const auto& [key, c] : engine.fits()) {
                auto fj = to_json(c.fit);
                fj["dataset"] = engine.data().name;
                fj["spec"] = spec_label(c.spec);
                fj["key"] = key;
                fits.push_back(std::move(fj));
            }
        }
        auto out = files.open(dir / "fits.json");
        out << fits.dump(2) << '\n';
    }
    for (const auto& engine : engines)
        for (const auto& [key, c] : engine.fits())
            for (const auto& w : c.fit.warnings)
                if (log) *log << "warning: " << engine.data().name << ": " << spec_label(c.spec) << ": " << w << '\n';
    files.keep = true;
    return files.written;
}

}  // namespace antic
