// Semantic labeling of word clusters and cross-target label comparison.

#ifndef CBIAS_LABEL_H_
#define CBIAS_LABEL_H_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cbias/cluster.h"
#include "cbias/sentiment.h"

namespace cbias {

// word -> ordered category labels (most likely first). Lookup is
// case-insensitive.
class SemanticLexicon {
public:
    SemanticLexicon() = default;

    void add(std::string word, std::vector<std::string> labels);
    // Registers a label that no word maps to yet.
    void add_category(std::string label) { inventory_.insert(std::move(label)); }

    const std::vector<std::string> *labels(std::string_view word) const;
    const std::set<std::string> &inventory() const { return inventory_; }
    std::size_t size() const { return words_.size(); }

    // TSV "word<TAB>label1|label2|...".
    static SemanticLexicon load(const std::filesystem::path &path);

private:
    std::unordered_map<std::string, std::vector<std::string>> words_;
    std::set<std::string> inventory_;
};

enum class TagMode { kFirstLabel, kAllLabels };

using LabelCounts = std::map<std::string, std::size_t>;

// Multiset union of the member words' labels. Unknown words add nothing.
LabelCounts tag_cluster(const SemanticLexicon &lex, std::span<const std::string> cluster,
                        TagMode mode = TagMode::kFirstLabel);

enum class LabelSource { kDirect, kPropagated };
std::string_view to_string(LabelSource source);

struct LabeledCluster {
    std::vector<std::string> words;
    std::vector<std::string> labels;  // sorted
    LabelSource source = LabelSource::kDirect;
    std::optional<std::size_t> donor;  // set for propagated clusters
    double sentiment = 0.0;            // mean prior polarity of the members
    Vec centroid;
};

struct LabeledPartition {
    std::string target;
    std::vector<LabeledCluster> clusters;
};

// Labels every cluster with its most frequent tag(s) (all tags tied at the
// maximum). Clusters the lexicon cannot tag copy the labels of the nearest
// directly-labeled cluster by centroid cosine (ties -> lower index); they are
// processed largest first. Throws LabelingError when no cluster is directly
// taggable.
LabeledPartition label_clusters(const ClusterPartition &partition,
                                const SemanticLexicon &lex,
                                const SentimentLexicon &sentiment,
                                TagMode mode = TagMode::kFirstLabel,
                                std::string target = {});

struct LabelRank {
    std::string label;
    std::size_t rank = 0;      // 1-based
    std::size_t clusters = 0;  // clusters carrying the label
    std::size_t words = 0;     // total members of those clusters
};

// Orders labels by cluster count, then word count (both descending), then
// label text.
bool label_rank_before(const LabelRank &a, const LabelRank &b);
std::vector<LabelRank> rank_labels(const LabeledPartition &labeled);

struct LabelRow {
    std::string label;
    std::optional<std::size_t> rank1, rank2;
    // Mean over the label's clusters of their sentiment, per side.
    std::optional<double> sent1, sent2;
    // Mean over all member words of the label's clusters, per side.
    std::optional<double> word_sent1, word_sent2;
    double sent_w = 0.0;  // side where the label ranks higher (side 1 on ties)
    std::size_t clusters1 = 0, clusters2 = 0, words1 = 0, words2 = 0;
};

struct LabelRankTable {
    std::string name1, name2;
    std::vector<LabelRow> rows;  // by best rank, then label
};

LabelRankTable compare_targets(const LabeledPartition &side1, const LabeledPartition &side2,
                               std::string name1, std::string name2);

// Ordered concept -> labels mapping.
using ConceptMap = std::vector<std::pair<std::string, std::vector<std::string>>>;
ConceptMap load_concept_map(const std::filesystem::path &path);

struct ConceptCount {
    std::string concept_name;
    std::size_t clusters1 = 0, clusters2 = 0, words1 = 0, words2 = 0;
};

// Counts clusters (and their words) carrying any label mapped to each concept.
// Throws ConfigError when the map names a label outside the inventory.
std::vector<ConceptCount> concept_frequency(const LabeledPartition &side1,
                                            const LabeledPartition &side2,
                                            const ConceptMap &concepts,
                                            const std::set<std::string> &inventory);

std::string labeled_partition_json(const LabeledPartition &labeled,
                                   const std::map<std::string, std::string> &meta = {});
// Reads clusters, labels and sentiments back; metadata keys are returned in meta.
LabeledPartition parse_labeled_partition_json(std::string_view text,
                                              std::map<std::string, std::string> *meta = nullptr);
std::string label_table_csv(const LabelRankTable &table);
std::string label_table_json(const LabelRankTable &table,
                             const std::map<std::string, std::string> &meta = {});
std::string concept_frequency_csv(const std::vector<ConceptCount> &counts,
                                  std::string_view name1, std::string_view name2);

}  // namespace cbias

#endif  // CBIAS_LABEL_H_
