// End-to-end bias discovery: corpus -> embeddings -> rankings -> clusters ->
// labels -> comparison table, plus the on-disk report bundle.

#ifndef CBIAS_PIPELINE_H_
#define CBIAS_PIPELINE_H_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cbias/bias.h"
#include "cbias/cluster.h"
#include "cbias/corpus.h"
#include "cbias/embedding.h"
#include "cbias/errors.h"
#include "cbias/label.h"
#include "cbias/sentiment.h"

namespace cbias {

inline constexpr const char *kVersion = "0.1.0";

// Failure inside one pipeline stage; what() is prefixed with the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string &what)
        : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
    const std::string &stage() const { return stage_; }

private:
    std::string stage_;
};

struct PipelineConfig {
    std::filesystem::path corpus;
    InputFormat corpus_format = InputFormat::kJsonl;
    // When set, vectors are loaded instead of trained.
    std::filesystem::path model;
    VectorFormat model_format = VectorFormat::kBinary;
    TrainConfig train;
    std::filesystem::path target1, target2;
    std::set<PosTag> pos{PosTag::kAdjective};
    std::size_t k = 300;
    double r = 0.15;
    std::filesystem::path lexicon_sem, lexicon_sent, lexicon_pos, lexicon_pos_suffix;
    std::filesystem::path concepts;  // optional concept map
    TagMode tag_mode = TagMode::kFirstLabel;
    std::filesystem::path out = "cbias-out";
    std::uint64_t seed = 1;
    bool deterministic = true;  // forces a single training worker

    // Throws ConfigError for out-of-range values or missing files.
    void validate() const;
    // Canonical "key = value" lines, sorted by key; excludes the output dir.
    std::string canonical() const;
    std::string hash() const;
};

// Applies one key/value setting (config-file or environment spelling).
// Relative paths are resolved against base_dir. Throws ConfigError for an
// unknown key or unparsable value.
void apply_setting(PipelineConfig &config, const std::string &key, const std::string &value,
                   const std::filesystem::path &base_dir = {});

// Flat "key = value" document; '#' starts a comment.
PipelineConfig load_config(const std::filesystem::path &path);
void apply_config_file(PipelineConfig &config, const std::filesystem::path &path);
// Applies CBIAS_<KEY> environment variables (e.g. CBIAS_K=200).
void apply_environment(PipelineConfig &config);
std::vector<std::string> config_keys();

struct PipelineResources {
    TargetSet target1, target2;
    PosLexicon pos;
    SemanticLexicon semantic;
    SentimentLexicon sentiment;
    std::optional<ConceptMap> concepts;

    static PipelineResources load(const PipelineConfig &config);
};

// Seed streams derived from the master seed.
enum class SeedStream : std::uint64_t { kTrain = 1, kCluster1 = 2, kCluster2 = 3, kBootstrap = 4 };
std::uint64_t stage_seed(std::uint64_t master, SeedStream stream);

struct AnalysisResult {
    BiasDistribution distribution;
    BiasRanking top1, top2;
    ClusterPartition partition1, partition2;
    LabeledPartition labeled1, labeled2;
    LabelRankTable table;
    std::optional<std::vector<ConceptCount>> concepts;
};

// Everything after the embedding model: rank, cluster and label both sides.
AnalysisResult analyze(const EmbeddingModel &model, const PipelineResources &res,
                       const PipelineConfig &config, std::uint64_t seed);

// Trains (or loads) the model described by the config.
EmbeddingModel obtain_model(const PipelineConfig &config, const TokenizedCorpus *corpus,
                            std::uint64_t seed);

struct PipelineReport {
    std::filesystem::path out;
    std::vector<std::string> artifacts;  // file names inside out
    std::string config_hash;
    std::string model_hash;
    AnalysisResult analysis;
};

// Runs every stage and writes the report bundle. Files are staged in a
// temporary directory and moved into config.out only when all stages succeed;
// on failure nothing is left behind and a StageError is thrown.
PipelineReport run_pipeline(const PipelineConfig &config);

// File-system friendly form of a target name.
std::string slug(std::string_view name);

}  // namespace cbias

#endif  // CBIAS_PIPELINE_H_
