#include "cbias/pipeline.h"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cbias/util.h"

namespace cbias {

namespace {

std::string normalize_key(std::string key) {
    key = to_lower(trim(key));
    for (char &c : key) {
        if (c == '-') c = '_';
    }
    return key;
}

template <class T>
T parse_number(const std::string &key, const std::string &value) {
    try {
        std::size_t used = 0;
        T out;
        if constexpr (std::is_floating_point_v<T>) {
            out = static_cast<T>(std::stod(value, &used));
        } else {
            if (!value.empty() && value[0] == '-') throw std::invalid_argument("negative");
            out = static_cast<T>(std::stoull(value, &used));
        }
        if (used != value.size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception &) {
        throw ConfigError("invalid value '" + value + "' for " + key);
    }
}

bool parse_bool(const std::string &key, const std::string &value) {
    std::string v = to_lower(value);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("invalid boolean '" + value + "' for " + key);
}

std::filesystem::path resolve(const std::string &value, const std::filesystem::path &base) {
    if (value.empty()) return {};
    std::filesystem::path p(value);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
}

using Setter = std::function<void(PipelineConfig &, const std::string &,
                                  const std::filesystem::path &)>;

const std::map<std::string, Setter> &setters() {
    static const std::map<std::string, Setter> table = {
        {"corpus", [](auto &c, auto &v, auto &b) { c.corpus = resolve(v, b); }},
        {"format", [](auto &c, auto &v, auto &) {
             try {
                 c.corpus_format = parse_input_format(v);
             } catch (const ArgumentError &e) {
                 throw ConfigError(e.what());
             }
         }},
        {"model", [](auto &c, auto &v, auto &b) { c.model = resolve(v, b); }},
        {"model_format", [](auto &c, auto &v, auto &) {
             try {
                 c.model_format = parse_vector_format(v);
             } catch (const ArgumentError &e) {
                 throw ConfigError(e.what());
             }
         }},
        {"target1", [](auto &c, auto &v, auto &b) { c.target1 = resolve(v, b); }},
        {"target2", [](auto &c, auto &v, auto &b) { c.target2 = resolve(v, b); }},
        {"targets", [](auto &c, auto &v, auto &b) {
             auto parts = split(v, ',');
             if (parts.size() != 2) throw ConfigError("targets expects two comma-separated files");
             c.target1 = resolve(std::string(trim(parts[0])), b);
             c.target2 = resolve(std::string(trim(parts[1])), b);
         }},
        {"pos", [](auto &c, auto &v, auto &) {
             try {
                 c.pos = parse_pos_tags(v);
             } catch (const Error &e) {
                 throw ConfigError(e.what());
             }
         }},
        {"k", [](auto &c, auto &v, auto &) { c.k = parse_number<std::size_t>("k", v); }},
        {"r", [](auto &c, auto &v, auto &) { c.r = parse_number<double>("r", v); }},
        {"lexicon_sem", [](auto &c, auto &v, auto &b) { c.lexicon_sem = resolve(v, b); }},
        {"lexicon_sent", [](auto &c, auto &v, auto &b) { c.lexicon_sent = resolve(v, b); }},
        {"lexicon_pos", [](auto &c, auto &v, auto &b) { c.lexicon_pos = resolve(v, b); }},
        {"lexicon_pos_suffix",
         [](auto &c, auto &v, auto &b) { c.lexicon_pos_suffix = resolve(v, b); }},
        {"concepts", [](auto &c, auto &v, auto &b) { c.concepts = resolve(v, b); }},
        {"tag_mode", [](auto &c, auto &v, auto &) {
             if (v == "first") {
                 c.tag_mode = TagMode::kFirstLabel;
             } else if (v == "all") {
                 c.tag_mode = TagMode::kAllLabels;
             } else {
                 throw ConfigError("tag_mode must be 'first' or 'all'");
             }
         }},
        {"out", [](auto &c, auto &v, auto &b) { c.out = resolve(v, b); }},
        {"seed", [](auto &c, auto &v, auto &) { c.seed = parse_number<std::uint64_t>("seed", v); }},
        {"workers", [](auto &c, auto &v, auto &) {
             c.train.workers = parse_number<std::size_t>("workers", v);
         }},
        {"deterministic",
         [](auto &c, auto &v, auto &) { c.deterministic = parse_bool("deterministic", v); }},
        {"dim", [](auto &c, auto &v, auto &) { c.train.dim = parse_number<std::size_t>("dim", v); }},
        {"window", [](auto &c, auto &v, auto &) {
             c.train.window = parse_number<std::size_t>("window", v);
         }},
        {"min_count", [](auto &c, auto &v, auto &) {
             c.train.min_count = parse_number<std::uint64_t>("min_count", v);
         }},
        {"epochs", [](auto &c, auto &v, auto &) {
             c.train.epochs = parse_number<std::size_t>("epochs", v);
         }},
        {"negatives", [](auto &c, auto &v, auto &) {
             c.train.negatives = parse_number<std::size_t>("negatives", v);
         }},
        {"alpha", [](auto &c, auto &v, auto &) { c.train.alpha = parse_number<double>("alpha", v); }},
        {"min_alpha", [](auto &c, auto &v, auto &) {
             c.train.min_alpha = parse_number<double>("min_alpha", v);
         }},
        {"subsample", [](auto &c, auto &v, auto &) {
             c.train.subsample = parse_number<double>("subsample", v);
         }},
    };
    return table;
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto &[k, _] : setters()) keys.push_back(k);
    return keys;
}

void apply_setting(PipelineConfig &config, const std::string &key, const std::string &value,
                   const std::filesystem::path &base_dir) {
    auto it = setters().find(normalize_key(key));
    if (it == setters().end()) throw ConfigError("unknown configuration key '" + key + "'");
    it->second(config, std::string(trim(value)), base_dir);
}

void apply_config_file(PipelineConfig &config, const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    auto base = std::filesystem::absolute(path).parent_path();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(fmt::format("{}:{}: expected key = value", path.string(), line_no));
        }
        try {
            apply_setting(config, line.substr(0, eq), line.substr(eq + 1), base);
        } catch (const ConfigError &e) {
            throw ConfigError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
}

PipelineConfig load_config(const std::filesystem::path &path) {
    PipelineConfig config;
    apply_config_file(config, path);
    return config;
}

void apply_environment(PipelineConfig &config) {
    for (const auto &key : config_keys()) {
        std::string name = "CBIAS_";
        for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char *value = std::getenv(name.c_str())) {
            apply_setting(config, key, value, std::filesystem::current_path());
        }
    }
}

void PipelineConfig::validate() const {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("r must lie in (0, 1]");
    if (k < 1) throw ConfigError("k must be at least 1");
    if (model.empty() && corpus.empty()) {
        throw ConfigError("either a corpus or a pre-trained model is required");
    }
    train.validate();
    auto require = [](const std::filesystem::path &p, const char *what) {
        if (p.empty()) throw ConfigError(std::string(what) + " is not set");
        if (!std::filesystem::exists(p)) {
            throw ConfigError(std::string(what) + " not found: " + p.string());
        }
    };
    if (model.empty()) {
        require(corpus, "corpus");
    } else {
        require(model, "model");
    }
    require(target1, "target1");
    require(target2, "target2");
    require(lexicon_sem, "lexicon_sem");
    require(lexicon_sent, "lexicon_sent");
    require(lexicon_pos, "lexicon_pos");
    if (!lexicon_pos_suffix.empty()) require(lexicon_pos_suffix, "lexicon_pos_suffix");
    if (!concepts.empty()) require(concepts, "concepts");
}

std::string PipelineConfig::canonical() const {
    std::map<std::string, std::string> kv = {
        {"corpus", corpus.string()},
        {"format", std::string(to_string(corpus_format))},
        {"model", model.string()},
        {"model_format", model_format == VectorFormat::kText ? "word2vec-text" : "word2vec-binary"},
        {"target1", target1.string()},
        {"target2", target2.string()},
        {"pos", to_string(pos)},
        {"k", std::to_string(k)},
        {"r", fmt::format("{}", r)},
        {"lexicon_sem", lexicon_sem.string()},
        {"lexicon_sent", lexicon_sent.string()},
        {"lexicon_pos", lexicon_pos.string()},
        {"lexicon_pos_suffix", lexicon_pos_suffix.string()},
        {"concepts", concepts.string()},
        {"tag_mode", tag_mode == TagMode::kFirstLabel ? "first" : "all"},
        {"seed", std::to_string(seed)},
        {"workers", std::to_string(train.workers)},
        {"deterministic", deterministic ? "true" : "false"},
        {"dim", std::to_string(train.dim)},
        {"window", std::to_string(train.window)},
        {"min_count", std::to_string(train.min_count)},
        {"epochs", std::to_string(train.epochs)},
        {"negatives", std::to_string(train.negatives)},
        {"alpha", fmt::format("{}", train.alpha)},
        {"min_alpha", fmt::format("{}", train.min_alpha)},
        {"subsample", fmt::format("{}", train.subsample)},
    };
    std::string out;
    for (const auto &[key, value] : kv) out += key + " = " + value + "\n";
    return out;
}

std::string PipelineConfig::hash() const {
    Fnv1a h;
    h.update(canonical());
    return h.hex();
}

PipelineResources PipelineResources::load(const PipelineConfig &config) {
    PipelineResources res{load_target_set(config.target1),
                          load_target_set(config.target2),
                          PosLexicon::load(config.lexicon_pos, config.lexicon_pos_suffix),
                          SemanticLexicon::load(config.lexicon_sem),
                          SentimentLexicon::load(config.lexicon_sent),
                          std::nullopt};
    if (!config.concepts.empty()) res.concepts = load_concept_map(config.concepts);
    return res;
}

std::uint64_t stage_seed(std::uint64_t master, SeedStream stream) {
    return derive_seed(master, static_cast<std::uint64_t>(stream));
}

namespace {

template <class Fn>
auto run_stage(const char *name, Fn &&fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError &) {
        throw;
    } catch (const std::exception &e) {
        throw StageError(name, e.what());
    }
}

BiasRanking head(const BiasRanking &full, std::size_t k) {
    BiasRanking out = full;
    out.k = k;
    if (out.entries.size() > k) {
        out.entries.resize(k);
    } else if (out.entries.size() < k) {
        out.truncated = true;
        spdlog::warn("only {} candidates for top-{} ranking toward '{}'", out.entries.size(), k,
                     out.target);
    }
    return out;
}

}  // namespace

AnalysisResult analyze(const EmbeddingModel &model, const PipelineResources &res,
                       const PipelineConfig &config, std::uint64_t seed) {
    AnalysisResult a;
    run_stage("rank", [&] {
        a.distribution = bias_distribution(model, res.target1, res.target2, res.pos, config.pos);
        a.top1 = head(a.distribution.toward_s1, config.k);
        a.top2 = head(a.distribution.toward_s2, config.k);
        if (a.top1.entries.empty() || a.top2.entries.empty()) {
            throw Error("no candidate words pass the part-of-speech filter");
        }
    });
    run_stage("cluster", [&] {
        a.partition1 = kmeans_partition(model, a.top1.words(), config.r,
                                        stage_seed(seed, SeedStream::kCluster1));
        a.partition2 = kmeans_partition(model, a.top2.words(), config.r,
                                        stage_seed(seed, SeedStream::kCluster2));
    });
    run_stage("label", [&] {
        a.labeled1 = label_clusters(a.partition1, res.semantic, res.sentiment, config.tag_mode,
                                    res.target1.name);
        a.labeled2 = label_clusters(a.partition2, res.semantic, res.sentiment, config.tag_mode,
                                    res.target2.name);
    });
    run_stage("compare", [&] {
        a.table = compare_targets(a.labeled1, a.labeled2, res.target1.name, res.target2.name);
        if (res.concepts) {
            a.concepts = concept_frequency(a.labeled1, a.labeled2, *res.concepts,
                                           res.semantic.inventory());
        }
    });
    return a;
}

EmbeddingModel obtain_model(const PipelineConfig &config, const TokenizedCorpus *corpus,
                            std::uint64_t seed) {
    if (!config.model.empty()) return load_embeddings(config.model, config.model_format);
    if (!corpus) throw ConfigError("training requires a corpus");
    TrainConfig train = config.train;
    train.seed = stage_seed(seed, SeedStream::kTrain);
    if (config.deterministic) train.workers = 1;
    return train_skipgram(*corpus, train);
}

std::string slug(std::string_view name) {
    std::string out;
    for (char c : to_lower(name)) {
        bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (keep) {
            out += c;
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out.empty() ? "target" : out;
}

namespace {

class Stopwatch {
public:
    double lap() {
        auto now = std::chrono::steady_clock::now();
        double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace

PipelineReport run_pipeline(const PipelineConfig &config) {
    Stopwatch clock;
    nlohmann::ordered_json timings;
    run_stage("config", [&] { config.validate(); });
    auto res = run_stage("resources", [&] { return PipelineResources::load(config); });
    timings["resources"] = clock.lap();

    std::optional<TokenizedCorpus> corpus;
    IngestStats ingest_stats;
    if (config.model.empty()) {
        corpus = run_stage("corpus", [&] {
            return TokenizedCorpus::load(config.corpus, config.corpus_format, &ingest_stats);
        });
        timings["corpus"] = clock.lap();
    }
    auto model = run_stage("embedding", [&] {
        return obtain_model(config, corpus ? &*corpus : nullptr, config.seed);
    });
    timings["embedding"] = clock.lap();

    PipelineReport report;
    report.analysis = analyze(model, res, config, config.seed);
    timings["analysis"] = clock.lap();
    report.out = config.out;
    report.config_hash = config.hash();
    report.model_hash = model.hash();

    const auto &a = report.analysis;
    std::string s1 = slug(res.target1.name), s2 = slug(res.target2.name);
    if (s1 == s2) {
        s1 += "_1";
        s2 += "_2";
    }
    const std::string csv_meta =
        fmt::format("# config_hash={} model_hash={}\n", report.config_hash, report.model_hash);
    const std::map<std::string, std::string> json_meta = {
        {"config_hash", report.config_hash}, {"model_hash", report.model_hash}};

    std::filesystem::path out = config.out;
    std::filesystem::path staging;
    run_stage("write", [&] {
        std::filesystem::create_directories(out);
        staging = out / fmt::format(".staging-{}-{}", ::getpid(), report.config_hash);
        std::filesystem::remove_all(staging);
        std::filesystem::create_directories(staging);
    });
    try {
        run_stage("write", [&] {
            auto put = [&](const std::string &name, const std::string &content) {
                write_file(staging / name, content);
                report.artifacts.push_back(name);
            };
            if (config.model.empty()) {
                save_embeddings(model, staging / "model.bin", VectorFormat::kBinary);
                report.artifacts.push_back("model.bin");
                if (std::filesystem::exists(staging / "model.bin.vocab")) {
                    report.artifacts.push_back("model.bin.vocab");
                }
            } else {
                nlohmann::ordered_json ref;
                ref["config_hash"] = report.config_hash;
                ref["model_hash"] = report.model_hash;
                ref["path"] = config.model.string();
                ref["words"] = model.size();
                ref["dim"] = model.dim();
                put("model_ref.json", ref.dump(2) + "\n");
            }
            put("bias_distribution.csv", csv_meta + distribution_csv(a.distribution));
            put("ranking_" + s1 + ".csv", csv_meta + ranking_csv(a.top1));
            put("ranking_" + s2 + ".csv", csv_meta + ranking_csv(a.top2));
            put("labels_" + s1 + ".json", labeled_partition_json(a.labeled1, json_meta) + "\n");
            put("labels_" + s2 + ".json", labeled_partition_json(a.labeled2, json_meta) + "\n");
            put("label_table.csv", csv_meta + label_table_csv(a.table));
            put("label_table.json", label_table_json(a.table, json_meta) + "\n");
            if (a.concepts) {
                put("concepts.csv",
                    csv_meta + concept_frequency_csv(*a.concepts, res.target1.name,
                                                     res.target2.name));
            }

            nlohmann::ordered_json manifest;
            manifest["config_hash"] = report.config_hash;
            manifest["model_hash"] = report.model_hash;
            manifest["seed"] = config.seed;
            manifest["seeds"] = {
                {"train", stage_seed(config.seed, SeedStream::kTrain)},
                {"cluster1", stage_seed(config.seed, SeedStream::kCluster1)},
                {"cluster2", stage_seed(config.seed, SeedStream::kCluster2)}};
            nlohmann::ordered_json cfg;
            for (const auto &line : split(config.canonical(), '\n')) {
                auto eq = line.find(" = ");
                if (eq != std::string::npos) cfg[line.substr(0, eq)] = line.substr(eq + 3);
            }
            manifest["config"] = std::move(cfg);
            manifest["versions"] = {{"cbias", kVersion},
                                    {"compiler", __VERSION__},
                                    {"cxx", static_cast<long>(__cplusplus)}};
            manifest["targets"] = {{"target1", res.target1.name}, {"target2", res.target2.name}};
            manifest["lexicons"] = {{"sentiment_source", res.sentiment.source()},
                                    {"semantic_words", res.semantic.size()},
                                    {"pos_words", res.pos.size()}};
            if (corpus) {
                auto st = corpus->stats();
                manifest["corpus"] = {{"comments", st.comments},
                                      {"sentences", st.sentences},
                                      {"tokens", st.tokens},
                                      {"unique_tokens", st.unique_tokens},
                                      {"malformed_lines", ingest_stats.malformed},
                                      {"missing_body", ingest_stats.missing_body}};
            }
            manifest["model"] = {{"words", model.size()}, {"dim", model.dim()}};
            manifest["clusters"] = {{"target1", a.partition1.size()},
                                    {"target2", a.partition2.size()}};
            auto artifacts = report.artifacts;
            artifacts.push_back("manifest.json");
            manifest["artifacts"] = artifacts;
            put("manifest.json", manifest.dump(2) + "\n");

            // Wall-clock timings vary between runs, so they live outside the
            // manifest.
            timings["write"] = clock.lap();
            put("timings.json", timings.dump(2) + "\n");

            for (const auto &name : report.artifacts) {
                std::filesystem::rename(staging / name, out / name);
            }
            std::filesystem::remove_all(staging);
        });
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove_all(staging, ec);
        throw;
    }
    return report;
}

}  // namespace cbias
