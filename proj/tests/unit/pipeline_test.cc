#include <array>
#include <cstdio>
#include <cstdlib>
#include <map>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cbias/errors.h"
#include "cbias/pipeline.h"
#include "cbias/validation.h"
#include "test_helpers.h"

using namespace cbias;
using cbias::testing::TempDir;
namespace fs = std::filesystem;

namespace {

fs::path preset(const std::string &name) {
    return cbias::testing::data_dir() / "presets" / (name + ".conf");
}

PipelineConfig mini(const fs::path &out) {
    auto cfg = load_config(preset("mini"));
    cfg.out = out;
    return cfg;
}

struct Cmd {
    int status;
    std::string output;
};

// Runs the CLI with stdout and stderr captured together.
Cmd cli(const std::string &args) {
    std::string command = std::string(CBIAS_CLI) + " " + args + " 2>&1";
    Cmd r{0, {}};
    FILE *pipe = popen(command.c_str(), "r");
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
    int st = pclose(pipe);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string without_comment_lines(const std::string &text) {
    std::string out;
    for (const auto &line : split(text, '\n'))
        if (!line.empty() && line[0] != '#') out += line + "\n";
    return out;
}

const std::vector<std::string> kBundle = {
    "model.bin",        "bias_distribution.csv", "ranking_female.csv", "ranking_male.csv",
    "labels_female.json", "labels_male.json",    "label_table.csv",    "label_table.json",
    "manifest.json"};

}  // namespace

TEST(Config, PresetLoadsWithResolvedPaths) {
    auto cfg = load_config(preset("mini"));
    EXPECT_EQ(cfg.k, 40u);
    EXPECT_EQ(cfg.train.dim, 50u);
    EXPECT_EQ(cfg.train.min_count, 5u);
    EXPECT_TRUE(cfg.corpus.is_absolute());
    EXPECT_TRUE(fs::exists(cfg.corpus));
    EXPECT_EQ(cfg.target1.filename(), "female.json");
    EXPECT_EQ(cfg.pos, (std::set<PosTag>{PosTag::kAdjective}));
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, AllBundledPresetsParse) {
    for (const char *name : {"google_news", "theredpill", "dating_advice", "atheism",
                             "the_donald", "mini"}) {
        EXPECT_NO_THROW(load_config(preset(name))) << name;
    }
    EXPECT_EQ(load_config(preset("google_news")).k, 5000u);
    EXPECT_EQ(load_config(preset("dating_advice")).k, 200u);
    EXPECT_EQ(load_config(preset("theredpill")).k, 300u);
}

TEST(Config, SettingErrors) {
    PipelineConfig cfg;
    EXPECT_THROW(apply_setting(cfg, "nonsense", "1"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "k", "-3"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "r", "abc"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "tag_mode", "some"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "targets", "only_one.json"), ConfigError);
    apply_setting(cfg, "Min-Count", "7");
    EXPECT_EQ(cfg.train.min_count, 7u);
    apply_setting(cfg, "model", "vec.bin", "/base");
    EXPECT_EQ(cfg.model, fs::path("/base/vec.bin"));
}

TEST(Config, FileErrorsCarryLineNumbers) {
    TempDir dir;
    write_file(dir / "c.conf", "# comment\nk = 5\nbogus line\n");
    try {
        load_config(dir / "c.conf");
        FAIL();
    } catch (const ConfigError &e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
}

TEST(Config, Validation) {
    auto base = load_config(preset("mini"));
    auto bad_r = base;
    bad_r.r = 0;
    EXPECT_THROW(bad_r.validate(), ConfigError);
    bad_r.r = 1.2;
    EXPECT_THROW(bad_r.validate(), ConfigError);
    auto bad_k = base;
    bad_k.k = 0;
    EXPECT_THROW(bad_k.validate(), ConfigError);
    auto missing = base;
    missing.lexicon_sem = "/nonexistent/semantic.tsv";
    EXPECT_THROW(missing.validate(), ConfigError);
    auto nothing = base;
    nothing.corpus.clear();
    EXPECT_THROW(nothing.validate(), ConfigError);
}

TEST(Config, PrecedenceFileThenEnvironmentThenFlags) {
    auto cfg = load_config(preset("mini"));
    ::setenv("CBIAS_K", "77", 1);
    ::setenv("CBIAS_R", "0.5", 1);
    apply_environment(cfg);
    ::unsetenv("CBIAS_K");
    ::unsetenv("CBIAS_R");
    EXPECT_EQ(cfg.k, 77u);
    EXPECT_EQ(cfg.r, 0.5);
    apply_setting(cfg, "k", "12");
    EXPECT_EQ(cfg.k, 12u);
}

TEST(Config, CanonicalFormAndHash) {
    auto a = load_config(preset("mini"));
    auto b = a;
    b.out = "/somewhere/else";
    EXPECT_EQ(a.canonical(), b.canonical());
    EXPECT_EQ(a.hash(), b.hash());
    b.k = 41;
    EXPECT_NE(a.hash(), b.hash());
    auto lines = split(a.canonical(), '\n');
    std::vector<std::string> keys;
    for (const auto &l : lines)
        if (!l.empty()) keys.push_back(l.substr(0, l.find(' ')));
    EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
    EXPECT_EQ(std::count(keys.begin(), keys.end(), "out"), 0);
}

TEST(Seeds, StreamsDiffer) {
    std::set<std::uint64_t> seeds;
    for (auto s : {SeedStream::kTrain, SeedStream::kCluster1, SeedStream::kCluster2,
                   SeedStream::kBootstrap})
        seeds.insert(stage_seed(1, s));
    EXPECT_EQ(seeds.size(), 4u);
    EXPECT_EQ(stage_seed(5, SeedStream::kTrain), stage_seed(5, SeedStream::kTrain));
}

TEST(Slug, Forms) {
    EXPECT_EQ(slug("female"), "female");
    EXPECT_EQ(slug("White names!"), "white_names");
    EXPECT_EQ(slug("***"), "target");
}

TEST(RunPipeline, MiniBundleExistsAndParses) {
    TempDir dir;
    auto report = run_pipeline(mini(dir / "out"));
    for (const auto &name : kBundle) {
        auto path = dir / "out" / name;
        ASSERT_TRUE(fs::exists(path)) << name;
        if (name.ends_with(".json")) {
            auto doc = nlohmann::json::parse(read_file(path));
            EXPECT_EQ(doc.at("config_hash"), report.config_hash) << name;
        } else if (name.ends_with(".csv")) {
            auto text = read_file(path);
            EXPECT_EQ(text.rfind("# config_hash=" + report.config_hash, 0), 0u) << name;
            auto rows = split(without_comment_lines(text), '\n');
            auto cols = csv_split(rows[0]).size();
            for (const auto &row : rows)
                if (!row.empty()) EXPECT_EQ(csv_split(row).size(), cols) << name;
        }
    }
    auto manifest = nlohmann::json::parse(read_file(dir / "out" / "manifest.json"));
    EXPECT_EQ(manifest.at("model_hash"), report.model_hash);
    EXPECT_EQ(manifest.at("seed"), 1);
    EXPECT_TRUE(fs::exists(dir / "out" / "timings.json"));
    // No staging directory left behind.
    for (const auto &e : fs::directory_iterator(dir / "out"))
        EXPECT_FALSE(e.path().filename().string().starts_with(".staging"));
    EXPECT_EQ(report.analysis.top1.entries.size(), 40u);
    EXPECT_EQ(report.analysis.partition1.size(), cluster_count(0.15, 40));
}

TEST(RunPipeline, RerunIsByteIdentical) {
    TempDir dir;
    run_pipeline(mini(dir / "a"));
    run_pipeline(mini(dir / "b"));
    for (const auto &name : kBundle) {
        EXPECT_EQ(read_file(dir / "a" / name), read_file(dir / "b" / name)) << name;
    }
}

TEST(RunPipeline, LoadModeWritesReferenceAndMatches) {
    TempDir dir;
    auto first = run_pipeline(mini(dir / "train"));
    auto cfg = mini(dir / "load");
    cfg.model = dir / "train" / "model.bin";
    auto second = run_pipeline(cfg);
    EXPECT_TRUE(fs::exists(dir / "load" / "model_ref.json"));
    EXPECT_FALSE(fs::exists(dir / "load" / "model.bin"));
    EXPECT_EQ(first.model_hash, second.model_hash);
    EXPECT_EQ(without_comment_lines(read_file(dir / "train" / "label_table.csv")),
              without_comment_lines(read_file(dir / "load" / "label_table.csv")));
}

TEST(RunPipeline, FailureLeavesNothingBehind) {
    TempDir dir;
    write_file(dir / "sem.tsv", "zzzzqq\tNothing\n");
    auto cfg = mini(dir / "out");
    cfg.lexicon_sem = dir / "sem.tsv";
    try {
        run_pipeline(cfg);
        FAIL();
    } catch (const StageError &e) {
        EXPECT_EQ(e.stage(), "label");
    }
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(RunPipeline, ConceptReport) {
    TempDir dir;
    auto cfg = mini(dir / "out");
    cfg.concepts = cbias::testing::data_dir() / "concepts" / "gnews_weat.json";
    auto report = run_pipeline(cfg);
    ASSERT_TRUE(report.analysis.concepts.has_value());
    EXPECT_EQ(report.analysis.concepts->size(), 5u);
    EXPECT_TRUE(fs::exists(dir / "out" / "concepts.csv"));
}

TEST(Cli, RunAndRankAgree) {
    TempDir dir;
    auto conf = preset("mini").string();
    auto run = cli("run --config " + conf + " --out " + (dir / "run").string());
    ASSERT_EQ(run.status, 0) << run.output;
    auto model = (dir / "run" / "model.bin").string();
    auto rank = cli("rank --config " + conf + " --model " + model + " --out " +
                    (dir / "rank").string());
    ASSERT_EQ(rank.status, 0) << rank.output;
    for (const char *name : {"ranking_female.csv", "ranking_male.csv", "bias_distribution.csv"})
        EXPECT_EQ(without_comment_lines(read_file(dir / "run" / name)),
                  without_comment_lines(read_file(dir / "rank" / name)))
            << name;
}

TEST(Cli, ClusterLabelCompareChain) {
    TempDir dir;
    auto conf = preset("mini").string();
    ASSERT_EQ(cli("run --config " + conf + " --out " + (dir / "run").string()).status, 0);
    auto model = " --model " + (dir / "run" / "model.bin").string();
    auto c = cli("cluster --config " + conf + model + " --words " +
                 (dir / "run" / "ranking_female.csv").string() + " -o " +
                 (dir / "p.json").string());
    ASSERT_EQ(c.status, 0) << c.output;
    auto l = cli("label --config " + conf + model + " --partition " + (dir / "p.json").string() +
                 " --target female -o " + (dir / "l.json").string());
    ASSERT_EQ(l.status, 0) << l.output;
    auto cmp = cli("compare " + (dir / "l.json").string() + " " + (dir / "l.json").string() +
                   " --csv " + (dir / "t.csv").string());
    ASSERT_EQ(cmp.status, 0) << cmp.output;
    EXPECT_NE(read_file(dir / "t.csv").find("rank_female"), std::string::npos);

    // Same partition file, but claiming a different model.
    auto doc = nlohmann::json::parse(read_file(dir / "l.json"));
    doc["model_hash"] = "0000000000000000";
    write_file(dir / "other.json", doc.dump());
    auto refused = cli("compare " + (dir / "l.json").string() + " " +
                       (dir / "other.json").string());
    EXPECT_EQ(refused.status, 1);
    EXPECT_NE(refused.output.find("different models"), std::string::npos) << refused.output;
}

TEST(Cli, WeatOnTrainedModel) {
    TempDir dir;
    auto conf = preset("mini").string();
    auto model = dir / "m.bin";
    ASSERT_EQ(cli("train --config " + conf + " -o " + model.string()).status, 0);
    auto t = cbias::testing::data_dir() / "targets";
    auto w = cli("weat --config " + conf + " --model " + model.string() + " --x " +
                 (t / "female.json").string() + " --y " + (t / "male.json").string() + " --a " +
                 (t / "female.json").string() + " --b " + (t / "male.json").string() +
                 " --name self --json " + (dir / "w.json").string());
    ASSERT_EQ(w.status, 0) << w.output;
    EXPECT_NE(w.output.find("self,"), std::string::npos);
    auto doc = nlohmann::json::parse(read_file(dir / "w.json"));
    EXPECT_GE(doc.at("p_value").get<double>(), 0.0);
    EXPECT_LE(doc.at("p_value").get<double>(), 1.0);
}

TEST(Cli, StabilityAndSweeps) {
    TempDir dir;
    auto conf = preset("mini").string();
    auto s = cli("stability --config " + conf + " --runs 5 --fraction 0.5 --epochs 2 -o " +
                 (dir / "s.json").string());
    ASSERT_EQ(s.status, 0) << s.output;
    auto doc = nlohmann::json::parse(read_file(dir / "s.json"));
    EXPECT_EQ(doc.at("runs").size(), 5u);
    auto m = cli("sweep min-count --config " + conf + " --values 5,10 --epochs 2 -o " +
                 (dir / "m.json").string());
    ASSERT_EQ(m.status, 0) << m.output;
    EXPECT_EQ(nlohmann::json::parse(read_file(dir / "m.json")).size(), 2u);
}

TEST(Cli, ErrorsExitNonZero) {
    EXPECT_NE(cli("no-such-command").status, 0);
    auto r = cli("run --config /nonexistent.conf");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.output.find("cbias:"), std::string::npos);
    EXPECT_NE(cli("run --config " + preset("mini").string() + " --r 3").status, 0);
}
