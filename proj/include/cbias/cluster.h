// k-means concept clustering of biased words.
//
// Words are clustered on their L2-normalized vectors, so squared Euclidean
// distance is a monotone function of cosine similarity. The number of
// clusters is controlled by the reduction factor r = k / |words|.

#ifndef CBIAS_CLUSTER_H_
#define CBIAS_CLUSTER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cbias/embedding.h"

namespace cbias {

struct ClusterPartition {
    std::vector<std::vector<std::string>> clusters;
    // Mean of the members' L2-normalized vectors.
    std::vector<Vec> centroids;
    double r = 1.0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    bool converged = true;
    std::vector<std::string> duplicates;  // repeated input words that were dropped

    std::size_t size() const { return clusters.size(); }
};

constexpr std::size_t kMaxKmeansIterations = 300;

// k = max(1, round(r * |words|)).
std::size_t cluster_count(double r, std::size_t n);

// k-means++ seeding, then Lloyd iterations until the assignment stops
// changing or kMaxKmeansIterations is reached. Empty clusters take the point
// farthest from its current centroid. Throws ArgumentError for r outside
// (0, 1] or an empty word list, LookupError for out-of-vocabulary words.
ClusterPartition kmeans_partition(const EmbeddingModel &model,
                                  std::span<const std::string> words, double r,
                                  std::uint64_t seed);

// Rebuilds a partition (with centroids) from explicit clusters.
ClusterPartition make_partition(const EmbeddingModel &model,
                                std::vector<std::vector<std::string>> clusters);

// Mean over clusters of the mean pairwise cosine among members; a singleton
// contributes 1.
double intra_similarity(const EmbeddingModel &model, const ClusterPartition &partition);

// Index of the other cluster whose centroid is most cosine-similar to the
// given cluster's centroid (ties -> lower index). Throws StructureError when
// the partition has fewer than two clusters.
std::size_t nearest_cluster(const ClusterPartition &partition, std::size_t cluster);

// [{"label": null, "words": [...]}, ...]
std::string partition_json(const ClusterPartition &partition);
std::vector<std::vector<std::string>> parse_partition_json(std::string_view text);

}  // namespace cbias

#endif  // CBIAS_CLUSTER_H_
