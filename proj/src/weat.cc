#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cbias/errors.h"
#include "cbias/util.h"
#include "cbias/validation.h"

namespace cbias {

namespace {

std::vector<std::size_t> in_vocab(const EmbeddingModel &model, const TargetSet &set,
                                  std::vector<std::string> &used,
                                  std::vector<std::string> &dropped) {
    std::vector<std::size_t> ids;
    for (const auto &w : set.words) {
        if (auto i = model.lookup(w)) {
            ids.push_back(*i);
            used.push_back(w);
        } else {
            dropped.push_back(w);
        }
    }
    return ids;
}

// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    k = std::min(k, n - k);
    unsigned __int128 c = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i;
        if (c > UINT64_MAX) return UINT64_MAX;
    }
    return static_cast<std::uint64_t>(c);
}

}  // namespace

WeatResult weat(const EmbeddingModel &model, const TargetSet &x, const TargetSet &y,
                const TargetSet &a, const TargetSet &b, std::uint64_t max_permutations,
                std::uint64_t seed) {
    WeatResult result;
    std::vector<std::string> a_used, b_used;
    auto xs = in_vocab(model, x, result.x_used, result.dropped);
    auto ys = in_vocab(model, y, result.y_used, result.dropped);
    auto as = in_vocab(model, a, a_used, result.dropped);
    auto bs = in_vocab(model, b, b_used, result.dropped);
    if (xs.empty() || ys.empty() || as.empty() || bs.empty()) {
        throw TargetSetError("a WEAT word set has no word in the vocabulary");
    }
    while (xs.size() > ys.size()) {
        result.dropped.push_back(result.x_used.back());
        result.x_used.pop_back();
        xs.pop_back();
    }
    while (ys.size() > xs.size()) {
        result.dropped.push_back(result.y_used.back());
        result.y_used.pop_back();
        ys.pop_back();
    }
    if (!result.dropped.empty()) {
        spdlog::warn("WEAT: {} words dropped (out of vocabulary or trimmed to equal size)",
                     result.dropped.size());
    }

    auto association = [&](std::size_t w) {
        double sa = 0.0, sb = 0.0;
        for (auto i : as) sa += cosine(model.row(w), model.row(i));
        for (auto i : bs) sb += cosine(model.row(w), model.row(i));
        return sa / static_cast<double>(as.size()) - sb / static_cast<double>(bs.size());
    };
    const std::size_t m = xs.size();
    const std::size_t n = 2 * m;
    std::vector<double> s(n);
    for (std::size_t i = 0; i < m; ++i) {
        s[i] = association(xs[i]);
        s[m + i] = association(ys[i]);
    }
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    // stat(subset) = sum_subset - sum_rest = 2 * sum_subset - total.
    auto subset_stat = [&](const std::vector<std::size_t> &idx) {
        double sum = 0.0;
        for (auto i : idx) sum += s[i];
        return 2.0 * sum - total;
    };
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    result.statistic = subset_stat(idx);

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mean_x += s[i];
        mean_y += s[m + i];
    }
    mean_x /= static_cast<double>(m);
    mean_y /= static_cast<double>(m);
    const double mean_all = total / static_cast<double>(n);
    double ss = 0.0;
    for (double v : s) ss += (v - mean_all) * (v - mean_all);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    result.effect_size = sd > 0.0 ? (mean_x - mean_y) / sd : 0.0;

    const double threshold =
        result.statistic - 1e-12 * std::max(1.0, std::abs(result.statistic));
    std::uint64_t hits = 0;
    const std::uint64_t partitions = binomial(n, m);
    if (partitions <= max_permutations) {
        result.exact = true;
        result.permutations_used = partitions;
        // Lexicographic walk over all m-subsets of {0..n-1}.
        while (true) {
            if (subset_stat(idx) >= threshold) ++hits;
            std::size_t i = m;
            while (i > 0 && idx[i - 1] == n - m + i - 1) --i;
            if (i == 0) break;
            ++idx[i - 1];
            for (std::size_t j = i; j < m; ++j) idx[j] = idx[j - 1] + 1;
        }
    } else {
        result.permutations_used = max_permutations;
        Rng rng(seed);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::vector<std::size_t> subset(m);
        for (std::uint64_t p = 0; p < max_permutations; ++p) {
            for (std::size_t i = 0; i < m; ++i) {
                std::size_t j = i + rng.below(n - i);
                std::swap(order[i], order[j]);
                subset[i] = order[i];
            }
            if (subset_stat(subset) >= threshold) ++hits;
        }
    }
    result.p_value = static_cast<double>(hits) / static_cast<double>(result.permutations_used);
    return result;
}

std::string weat_csv_header() {
    return "test,statistic,effect_size,p_value,permutations,exact,x_size\n";
}

std::string weat_csv_line(std::string_view test, const WeatResult &r) {
    return fmt::format("{},{:.9g},{:.9g},{:.9g},{},{},{}\n", csv_field(test), r.statistic,
                       r.effect_size, r.p_value, r.permutations_used, r.exact ? "true" : "false",
                       r.x_used.size());
}

std::string weat_json(std::string_view test, const WeatResult &r) {
    nlohmann::ordered_json j;
    j["test"] = test;
    j["statistic"] = r.statistic;
    j["effect_size"] = r.effect_size;
    j["p_value"] = r.p_value;
    j["permutations_used"] = r.permutations_used;
    j["exact"] = r.exact;
    j["x_used"] = r.x_used;
    j["y_used"] = r.y_used;
    j["dropped"] = r.dropped;
    return j.dump(2);
}

double jaccard_topk(std::span<const std::string> a, std::span<const std::string> b) {
    std::unordered_set<std::string> sa(a.begin(), a.end());
    std::unordered_set<std::string> sb(b.begin(), b.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto &w : sa) inter += sb.count(w);
    return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

DirectBiasScorer::DirectBiasScorer(const EmbeddingModel &model, const TargetSet &s1,
                                   const TargetSet &s2)
    : model_(model) {
    auto c1 = centroid(model, s1.words);
    auto c2 = centroid(model, s2.words);
    direction_.resize(model.dim());
    for (std::size_t j = 0; j < direction_.size(); ++j) {
        direction_[j] = c1.vector[j] - c2.vector[j];
    }
    double n = norm(direction_);
    if (n == 0.0) throw DomainError("target centroids coincide; no bias direction");
    for (double &x : direction_) x /= n;
}

double DirectBiasScorer::score(std::size_t word_index) const {
    return cosine(model_.row(word_index), std::span<const double>(direction_));
}

BiasRanking direct_bias_rank(const EmbeddingModel &model, const TargetSet &s1,
                             const TargetSet &s2, const PosTagger &tagger,
                             const std::set<PosTag> &allowed, std::size_t k) {
    DirectBiasScorer scorer(model, s1, s2);
    return rank_by_score(model, s1, s2, tagger, allowed, k,
                         [&](std::size_t i) { return scorer.score(i); });
}

}  // namespace cbias
