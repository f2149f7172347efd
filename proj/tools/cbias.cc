// Command-line front end. `run` executes the whole pipeline; the other
// subcommands expose one stage each with file-based inputs and outputs.

#include <cstdio>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cbias/pipeline.h"
#include "cbias/util.h"
#include "cbias/validation.h"

using namespace cbias;

namespace {

// Flags shared by every subcommand that builds a PipelineConfig. Values are
// kept as strings and routed through apply_setting so that flags, config
// files and environment variables parse identically.
struct ConfigFlags {
    std::string config;
    std::map<std::string, std::string> values;
    std::vector<std::string> targets;
    bool deterministic = true;
    CLI::Option *targets_opt = nullptr;
    CLI::Option *det_opt = nullptr;
    std::vector<std::pair<std::string, CLI::Option *>> opts;

    void attach(CLI::App *app, bool training) {
        app->add_option("--config", config, "key = value configuration file")
            ->check(CLI::ExistingFile);
        add(app, "--corpus", "corpus", "comment corpus");
        add(app, "--format", "format", "jsonl | jsonl-gzip | plain-text");
        add(app, "--model", "model", "pre-trained word2vec file (skips training)");
        add(app, "--model-format", "model_format", "word2vec-binary | word2vec-text");
        targets_opt = app->add_option("--targets", targets, "two target-set JSON files")
                          ->expected(2);
        add(app, "--pos", "pos", "allowed POS tags, comma separated");
        add(app, "--k", "k", "top-k biased words per side");
        add(app, "--r", "r", "cluster reduction factor in (0, 1]");
        add(app, "--lexicon-sem", "lexicon_sem", "semantic label lexicon TSV");
        add(app, "--lexicon-sent", "lexicon_sent", "sentiment lexicon TSV");
        add(app, "--lexicon-pos", "lexicon_pos", "POS lexicon TSV");
        add(app, "--lexicon-pos-suffix", "lexicon_pos_suffix", "POS suffix rules TSV");
        add(app, "--concepts", "concepts", "concept map JSON");
        add(app, "--tag-mode", "tag_mode", "first | all");
        add(app, "--out", "out", "output directory");
        add(app, "--seed", "seed", "master seed");
        if (training) {
            add(app, "--workers", "workers", "training threads");
            add(app, "--dim", "dim", "embedding dimension");
            add(app, "--window", "window", "context window");
            add(app, "--min-count", "min_count", "minimum word frequency");
            add(app, "--epochs", "epochs", "training epochs");
            add(app, "--negatives", "negatives", "negative samples");
            add(app, "--subsample", "subsample", "frequent-word subsampling threshold");
            det_opt = app->add_flag("--deterministic,!--no-deterministic", deterministic,
                                    "single-worker reproducible training");
        }
    }

    void add(CLI::App *app, const std::string &flag, const std::string &key,
             const std::string &help) {
        opts.emplace_back(key, app->add_option(flag, values[key], help));
    }

    PipelineConfig build() const {
        PipelineConfig cfg;
        if (!config.empty()) apply_config_file(cfg, config);
        apply_environment(cfg);
        auto cwd = std::filesystem::current_path();
        for (const auto &[key, opt] : opts) {
            if (opt->count()) apply_setting(cfg, key, values.at(key), cwd);
        }
        if (targets_opt && targets_opt->count()) {
            apply_setting(cfg, "target1", targets[0], cwd);
            apply_setting(cfg, "target2", targets[1], cwd);
        }
        if (det_opt && det_opt->count()) cfg.deterministic = deterministic;
        return cfg;
    }
};

std::string meta_line(const PipelineConfig &cfg, const EmbeddingModel &model) {
    return fmt::format("# config_hash={} model_hash={}\n", cfg.hash(), model.hash());
}

void require(const std::filesystem::path &p, const char *what) {
    if (p.empty()) throw ArgumentError(std::string(what) + " is required");
}

void emit(const std::filesystem::path &path, const std::string &content) {
    if (path.empty() || path == "-") {
        std::cout << content;
    } else {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        write_file(path, content);
        spdlog::info("wrote {}", path.string());
    }
}

template <class T>
std::vector<T> parse_list(const std::string &text) {
    std::vector<T> out;
    for (const auto &part : split(text, ',')) {
        std::string s(trim(part));
        if (s.empty()) continue;
        try {
            if constexpr (std::is_floating_point_v<T>) {
                out.push_back(static_cast<T>(std::stod(s)));
            } else {
                out.push_back(static_cast<T>(std::stoull(s)));
            }
        } catch (const std::exception &) {
            throw ArgumentError("invalid list element '" + s + "'");
        }
    }
    if (out.empty()) throw ArgumentError("empty list");
    return out;
}

EmbeddingModel model_from(const PipelineConfig &cfg) {
    require(cfg.model, "--model");
    return load_embeddings(cfg.model, cfg.model_format);
}

TokenizedCorpus corpus_from(const PipelineConfig &cfg) {
    require(cfg.corpus, "--corpus");
    IngestStats stats;
    auto corpus = TokenizedCorpus::load(cfg.corpus, cfg.corpus_format, &stats);
    spdlog::info("corpus: {} comments, {} tokens ({} malformed lines)", corpus.stats().comments,
                 corpus.stats().tokens, stats.malformed);
    return corpus;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Discover and compare language biases in word embeddings"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "log progress");

    // run
    ConfigFlags run_flags;
    auto *run = app.add_subcommand("run", "full pipeline: embed, rank, cluster, label, compare");
    run_flags.attach(run, true);

    // train
    ConfigFlags train_flags;
    std::string train_output, train_vformat = "word2vec-binary";
    auto *train = app.add_subcommand("train", "train skip-gram embeddings on a corpus");
    train_flags.attach(train, true);
    train->add_option("-o,--output", train_output, "model file")->required();
    train->add_option("--vector-format", train_vformat, "word2vec-binary | word2vec-text");

    // load
    ConfigFlags load_flags;
    std::string load_save, load_vformat = "word2vec-binary";
    auto *load = app.add_subcommand("load", "load a model, print a summary, optionally convert");
    load_flags.attach(load, false);
    load->add_option("--save", load_save, "write the model back out");
    load->add_option("--vector-format", load_vformat, "format for --save");

    // rank
    ConfigFlags rank_flags;
    auto *rank = app.add_subcommand("rank", "rank words by bias toward each target set");
    rank_flags.attach(rank, false);
    bool rank_direct = false;
    rank->add_flag("--direct", rank_direct, "use the direct-bias score instead");

    // cluster
    ConfigFlags cluster_flags;
    std::string cluster_words, cluster_output;
    auto *cluster = app.add_subcommand("cluster", "k-means partition of a ranked word list");
    cluster_flags.attach(cluster, false);
    cluster->add_option("--words", cluster_words, "ranking CSV")->required()->check(CLI::ExistingFile);
    cluster->add_option("-o,--output", cluster_output, "partition JSON (default stdout)");

    // label
    ConfigFlags label_flags;
    std::string label_partition, label_output, label_target;
    auto *label = app.add_subcommand("label", "name clusters with semantic labels");
    label_flags.attach(label, false);
    label->add_option("--partition", label_partition, "partition JSON")
        ->required()
        ->check(CLI::ExistingFile);
    label->add_option("--target", label_target, "target name recorded in the output");
    label->add_option("-o,--output", label_output, "labeled partition JSON (default stdout)");

    // compare
    std::string cmp_side1, cmp_side2, cmp_csv, cmp_json;
    auto *compare = app.add_subcommand("compare", "join two labeled partitions into a rank table");
    compare->add_option("side1", cmp_side1, "labeled partition JSON")
        ->required()
        ->check(CLI::ExistingFile);
    compare->add_option("side2", cmp_side2, "labeled partition JSON")
        ->required()
        ->check(CLI::ExistingFile);
    compare->add_option("--csv", cmp_csv, "CSV output (default stdout)");
    compare->add_option("--json", cmp_json, "JSON output");

    // weat
    ConfigFlags weat_flags;
    std::string weat_x, weat_y, weat_a, weat_b, weat_name = "weat", weat_json_out;
    std::uint64_t weat_max = kDefaultMaxPermutations;
    auto *weat_cmd = app.add_subcommand("weat", "word-embedding association test");
    weat_flags.attach(weat_cmd, false);
    weat_cmd->add_option("--x", weat_x, "target set X")->required()->check(CLI::ExistingFile);
    weat_cmd->add_option("--y", weat_y, "target set Y")->required()->check(CLI::ExistingFile);
    weat_cmd->add_option("--a", weat_a, "attribute set A")->required()->check(CLI::ExistingFile);
    weat_cmd->add_option("--b", weat_b, "attribute set B")->required()->check(CLI::ExistingFile);
    weat_cmd->add_option("--name", weat_name, "test name in the output");
    weat_cmd->add_option("--max-permutations", weat_max, "exact enumeration cutoff");
    weat_cmd->add_option("--json", weat_json_out, "also write a JSON report");

    // stability
    ConfigFlags stab_flags;
    std::size_t stab_runs = 10;
    double stab_fraction = 0.5;
    std::string stab_output;
    auto *stability = app.add_subcommand("stability", "bootstrap stability of the label ranks");
    stab_flags.attach(stability, true);
    stability->add_option("--runs", stab_runs, "bootstrap runs");
    stability->add_option("--fraction", stab_fraction, "fraction of comments per run");
    stability->add_option("-o,--output", stab_output, "report JSON (default stdout)");

    // sweep
    ConfigFlags sweep_flags;
    std::string sweep_kind, sweep_values, sweep_words, sweep_output;
    auto *sweep = app.add_subcommand("sweep", "granularity (r) or min-count sensitivity sweep");
    sweep_flags.attach(sweep, true);
    sweep->add_option("kind", sweep_kind, "granularity | min-count")
        ->required()
        ->check(CLI::IsMember({"granularity", "min-count"}));
    sweep->add_option("--values", sweep_values, "comma-separated r values or thresholds")
        ->required();
    sweep->add_option("--words", sweep_words, "ranking CSV to cluster (granularity)")
        ->check(CLI::ExistingFile);
    sweep->add_option("-o,--output", sweep_output, "report JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "cbias: " << e.what() << "\nRun with --help for usage.\n";
        return 1;
    }
    spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);
    spdlog::set_pattern("%^%l%$: %v");

    try {
        if (run->parsed()) {
            auto cfg = run_flags.build();
            auto report = run_pipeline(cfg);
            for (const auto &a : report.artifacts) {
                std::cout << (report.out / a).string() << "\n";
            }
        } else if (train->parsed()) {
            auto cfg = train_flags.build();
            auto corpus = corpus_from(cfg);
            auto model = obtain_model(cfg, &corpus, cfg.seed);
            save_embeddings(model, train_output, parse_vector_format(train_vformat));
            std::cout << fmt::format("{} words, dim {}, hash {}\n", model.size(), model.dim(),
                                     model.hash());
        } else if (load->parsed()) {
            auto cfg = load_flags.build();
            auto model = model_from(cfg);
            std::cout << fmt::format("{} words, dim {}, hash {}\n", model.size(), model.dim(),
                                     model.hash());
            if (!load_save.empty()) {
                save_embeddings(model, load_save, parse_vector_format(load_vformat));
            }
        } else if (rank->parsed()) {
            auto cfg = rank_flags.build();
            auto model = model_from(cfg);
            auto res_t1 = load_target_set(cfg.target1);
            auto res_t2 = load_target_set(cfg.target2);
            require(cfg.lexicon_pos, "--lexicon-pos");
            auto pos = PosLexicon::load(cfg.lexicon_pos, cfg.lexicon_pos_suffix);
            std::filesystem::create_directories(cfg.out);
            const auto meta = meta_line(cfg, model);
            BiasRanking top1, top2;
            if (rank_direct) {
                top1 = direct_bias_rank(model, res_t1, res_t2, pos, cfg.pos, cfg.k);
                top2 = direct_bias_rank(model, res_t2, res_t1, pos, cfg.pos, cfg.k);
            } else {
                auto dist = bias_distribution(model, res_t1, res_t2, pos, cfg.pos);
                emit(cfg.out / "bias_distribution.csv", meta + distribution_csv(dist));
                top1 = rank_biased(model, res_t1, res_t2, pos, cfg.pos, cfg.k);
                top2 = rank_biased(model, res_t2, res_t1, pos, cfg.pos, cfg.k);
            }
            std::string s1 = slug(res_t1.name), s2 = slug(res_t2.name);
            if (s1 == s2) {
                s1 += "_1";
                s2 += "_2";
            }
            emit(cfg.out / ("ranking_" + s1 + ".csv"), meta + ranking_csv(top1));
            emit(cfg.out / ("ranking_" + s2 + ".csv"), meta + ranking_csv(top2));
        } else if (cluster->parsed()) {
            auto cfg = cluster_flags.build();
            auto model = model_from(cfg);
            auto words = read_ranking_words(cluster_words);
            auto partition =
                kmeans_partition(model, words, cfg.r, stage_seed(cfg.seed, SeedStream::kCluster1));
            emit(cluster_output, partition_json(partition) + "\n");
        } else if (label->parsed()) {
            auto cfg = label_flags.build();
            auto model = model_from(cfg);
            require(cfg.lexicon_sem, "--lexicon-sem");
            require(cfg.lexicon_sent, "--lexicon-sent");
            auto sem = SemanticLexicon::load(cfg.lexicon_sem);
            auto sent = SentimentLexicon::load(cfg.lexicon_sent);
            auto partition =
                make_partition(model, parse_partition_json(read_file(label_partition)));
            auto labeled = label_clusters(partition, sem, sent, cfg.tag_mode, label_target);
            emit(label_output,
                 labeled_partition_json(labeled, {{"config_hash", cfg.hash()},
                                                  {"model_hash", model.hash()}}) +
                     "\n");
        } else if (compare->parsed()) {
            std::map<std::string, std::string> m1, m2;
            auto l1 = parse_labeled_partition_json(read_file(cmp_side1), &m1);
            auto l2 = parse_labeled_partition_json(read_file(cmp_side2), &m2);
            if (m1["model_hash"] != m2["model_hash"]) {
                throw ArgumentError(fmt::format(
                    "refusing to compare partitions from different models ({} vs {})",
                    m1["model_hash"].empty() ? "unknown" : m1["model_hash"],
                    m2["model_hash"].empty() ? "unknown" : m2["model_hash"]));
            }
            auto name1 = l1.target.empty() ? std::string("side1") : l1.target;
            auto name2 = l2.target.empty() ? std::string("side2") : l2.target;
            auto table = compare_targets(l1, l2, name1, name2);
            std::map<std::string, std::string> meta = {{"model_hash", m1["model_hash"]}};
            if (!m1["config_hash"].empty()) meta["config_hash"] = m1["config_hash"];
            std::string header = fmt::format("# config_hash={} model_hash={}\n",
                                             m1["config_hash"], m1["model_hash"]);
            emit(cmp_csv, header + label_table_csv(table));
            if (!cmp_json.empty()) emit(cmp_json, label_table_json(table, meta) + "\n");
        } else if (weat_cmd->parsed()) {
            auto cfg = weat_flags.build();
            auto model = model_from(cfg);
            auto result = weat(model, load_target_set(weat_x), load_target_set(weat_y),
                               load_target_set(weat_a), load_target_set(weat_b), weat_max,
                               cfg.seed);
            std::cout << weat_csv_header() << weat_csv_line(weat_name, result);
            if (!weat_json_out.empty()) emit(weat_json_out, weat_json(weat_name, result) + "\n");
        } else if (stability->parsed()) {
            auto cfg = stab_flags.build();
            auto res = PipelineResources::load(cfg);
            auto corpus = corpus_from(cfg);
            auto report =
                bootstrap_stability(corpus, cfg, res, stab_runs, stab_fraction, cfg.seed);
            emit(stab_output, stability_json(report) + "\n");
        } else if (sweep->parsed()) {
            auto cfg = sweep_flags.build();
            if (sweep_kind == "granularity") {
                auto model = model_from(cfg);
                if (sweep_words.empty()) throw ArgumentError("--words is required");
                require(cfg.lexicon_sem, "--lexicon-sem");
                require(cfg.lexicon_sent, "--lexicon-sent");
                auto words = read_ranking_words(sweep_words);
                auto rs = parse_list<double>(sweep_values);
                auto report = granularity_sweep(
                    model, words, rs, SemanticLexicon::load(cfg.lexicon_sem),
                    SentimentLexicon::load(cfg.lexicon_sent),
                    stage_seed(cfg.seed, SeedStream::kCluster1), cfg.tag_mode);
                emit(sweep_output, granularity_json(report) + "\n");
            } else {
                auto res = PipelineResources::load(cfg);
                auto corpus = corpus_from(cfg);
                auto thresholds = parse_list<std::uint64_t>(sweep_values);
                auto cells = min_count_sweep(corpus, thresholds, cfg, res);
                emit(sweep_output, min_count_json(cells) + "\n");
            }
        }
    } catch (const std::exception &e) {
        std::cerr << "cbias: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
