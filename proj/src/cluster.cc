#include "cbias/cluster.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cbias/errors.h"
#include "cbias/util.h"

namespace cbias {

std::size_t cluster_count(double r, std::size_t n) {
    if (!(r > 0.0 && r <= 1.0)) throw ArgumentError("reduction factor r must lie in (0, 1]");
    auto k = static_cast<std::size_t>(std::llround(r * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n, 1));
}

namespace {

double squared_distance(const Vec &a, const Vec &b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

Vec normalized_vector(const EmbeddingModel &model, const std::string &word) {
    auto v = model.vector(word);
    if (!v) throw LookupError("word '" + word + "' not in vocabulary");
    double n = norm(*v);
    if (n == 0.0) throw DomainError("zero vector for '" + word + "'");
    Vec out(v->size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = (*v)[j] / n;
    return out;
}

std::vector<Vec> member_means(const std::vector<Vec> &points,
                              const std::vector<std::size_t> &assignment, std::size_t k) {
    const std::size_t d = points.front().size();
    std::vector<Vec> centroids(k, Vec(d, 0.0));
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto &c = centroids[assignment[i]];
        for (std::size_t j = 0; j < d; ++j) c[j] += points[i][j];
        ++sizes[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] == 0) continue;
        for (double &x : centroids[c]) x /= static_cast<double>(sizes[c]);
    }
    return centroids;
}

std::vector<Vec> plus_plus_seeds(const std::vector<Vec> &points, std::size_t k, Rng &rng) {
    const std::size_t n = points.size();
    std::vector<Vec> centers;
    std::vector<bool> chosen(n, false);
    std::size_t first = rng.below(n);
    centers.push_back(points[first]);
    chosen[first] = true;
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            best[i] = std::min(best[i], squared_distance(points[i], centers.back()));
            if (!chosen[i]) total += best[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i]) continue;
                acc += best[i];
                pick = i;
                if (acc > u) break;
            }
        } else {
            // Remaining points coincide with chosen centers.
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) rest.push_back(i);
            }
            pick = rest[rng.below(rest.size())];
        }
        chosen[pick] = true;
        centers.push_back(points[pick]);
    }
    return centers;
}

}  // namespace

ClusterPartition make_partition(const EmbeddingModel &model,
                                std::vector<std::vector<std::string>> clusters) {
    ClusterPartition p;
    p.k = clusters.size();
    for (const auto &members : clusters) {
        if (members.empty()) throw StructureError("partition contains an empty cluster");
        Vec c(model.dim(), 0.0);
        for (const auto &w : members) {
            Vec v = normalized_vector(model, w);
            for (std::size_t j = 0; j < c.size(); ++j) c[j] += v[j];
        }
        for (double &x : c) x /= static_cast<double>(members.size());
        p.centroids.push_back(std::move(c));
    }
    p.clusters = std::move(clusters);
    return p;
}

ClusterPartition kmeans_partition(const EmbeddingModel &model,
                                  std::span<const std::string> words, double r,
                                  std::uint64_t seed) {
    if (!(r > 0.0 && r <= 1.0)) throw ArgumentError("reduction factor r must lie in (0, 1]");
    if (words.empty()) throw ArgumentError("cannot cluster an empty word list");

    std::vector<std::string> unique;
    std::vector<std::string> duplicates;
    std::unordered_set<std::string> seen;
    for (const auto &w : words) {
        if (seen.insert(w).second) {
            unique.push_back(w);
        } else {
            duplicates.push_back(w);
        }
    }
    if (!duplicates.empty()) {
        spdlog::warn("{} duplicate words removed before clustering", duplicates.size());
    }
    std::vector<Vec> points;
    points.reserve(unique.size());
    for (const auto &w : unique) points.push_back(normalized_vector(model, w));

    const std::size_t n = unique.size();
    const std::size_t k = cluster_count(r, n);
    ClusterPartition result;
    result.r = r;
    result.k = k;
    result.seed = seed;
    result.duplicates = std::move(duplicates);

    std::vector<std::size_t> assignment(n, 0);
    if (k == n) {
        for (std::size_t i = 0; i < n; ++i) assignment[i] = i;
        result.iterations = 0;
    } else if (k > 1) {
        Rng rng(seed);
        std::vector<Vec> centers = plus_plus_seeds(points, k, rng);
        std::vector<std::size_t> previous(n, SIZE_MAX);
        result.converged = false;
        for (std::size_t iter = 1; iter <= kMaxKmeansIterations; ++iter) {
            result.iterations = iter;
            std::vector<double> distance(n);
            for (std::size_t i = 0; i < n; ++i) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < k; ++c) {
                    double dist = squared_distance(points[i], centers[c]);
                    if (dist < best) {
                        best = dist;
                        assignment[i] = c;
                    }
                }
                distance[i] = best;
            }
            // Repair empty clusters by stealing the worst-fitting point of a
            // cluster that can spare one.
            std::vector<std::size_t> sizes(k, 0);
            for (auto a : assignment) ++sizes[a];
            for (std::size_t c = 0; c < k; ++c) {
                if (sizes[c] != 0) continue;
                std::size_t far = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (sizes[assignment[i]] < 2) continue;
                    if (far == n || distance[i] > distance[far]) far = i;
                }
                --sizes[assignment[far]];
                assignment[far] = c;
                sizes[c] = 1;
                distance[far] = 0.0;
            }
            centers = member_means(points, assignment, k);
            if (assignment == previous) {
                result.converged = true;
                break;
            }
            previous = assignment;
        }
    }

    result.clusters.assign(k, {});
    for (std::size_t i = 0; i < n; ++i) result.clusters[assignment[i]].push_back(unique[i]);
    result.centroids = member_means(points, assignment, k);
    return result;
}

double intra_similarity(const EmbeddingModel &model, const ClusterPartition &partition) {
    if (partition.clusters.empty()) return 0.0;
    double total = 0.0;
    for (const auto &members : partition.clusters) {
        if (members.size() < 2) {
            total += 1.0;
            continue;
        }
        std::vector<std::span<const float>> vecs;
        for (const auto &w : members) {
            auto v = model.vector(w);
            if (!v) throw LookupError("word '" + w + "' not in vocabulary");
            vecs.push_back(*v);
        }
        double sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < vecs.size(); ++a) {
            for (std::size_t b = a + 1; b < vecs.size(); ++b) {
                sum += cosine(vecs[a], vecs[b]);
                ++pairs;
            }
        }
        total += sum / static_cast<double>(pairs);
    }
    return total / static_cast<double>(partition.clusters.size());
}

std::size_t nearest_cluster(const ClusterPartition &partition, std::size_t cluster) {
    const std::size_t k = partition.centroids.size();
    if (k < 2) throw StructureError("nearest cluster needs at least two clusters");
    if (cluster >= k) throw ArgumentError("cluster index out of range");
    std::size_t best = k;
    double best_sim = -std::numeric_limits<double>::infinity();
    const auto &c = partition.centroids[cluster];
    for (std::size_t j = 0; j < k; ++j) {
        if (j == cluster) continue;
        double sim = cosine(std::span<const double>(c), std::span<const double>(partition.centroids[j]));
        if (sim > best_sim) {
            best_sim = sim;
            best = j;
        }
    }
    return best;
}

std::string partition_json(const ClusterPartition &partition) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto &members : partition.clusters) {
        out.push_back({{"label", nullptr}, {"words", members}});
    }
    return out.dump(2);
}

std::vector<std::vector<std::string>> parse_partition_json(std::string_view text) {
    auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_object() && doc.contains("clusters")) doc = doc["clusters"];
    if (doc.is_discarded() || !doc.is_array()) {
        throw FormatError("partition JSON must be an array of {\"words\": [...]}");
    }
    std::vector<std::vector<std::string>> clusters;
    for (const auto &c : doc) {
        if (!c.is_object() || !c.contains("words") || !c["words"].is_array()) {
            throw FormatError("partition entry without a words array");
        }
        clusters.push_back(c["words"].get<std::vector<std::string>>());
    }
    return clusters;
}

}  // namespace cbias
