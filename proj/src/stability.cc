#include <algorithm>
#include <functional>
#include <set>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cbias/util.h"
#include "cbias/validation.h"

namespace cbias {

std::vector<std::string> top_labels(const LabeledPartition &labeled, std::size_t n) {
    std::vector<std::string> out;
    for (const auto &r : rank_labels(labeled)) {
        if (out.size() == n) break;
        out.push_back(r.label);
    }
    return out;
}

std::size_t overlap_count(std::span<const std::string> a, std::span<const std::string> b) {
    std::set<std::string> sa(a.begin(), a.end());
    std::set<std::string> seen;
    std::size_t n = 0;
    for (const auto &w : b) {
        if (sa.count(w) && seen.insert(w).second) ++n;
    }
    return n;
}

namespace {

std::map<std::string, LabelRankStats> rank_stats(
    const std::vector<StabilityRun> &runs,
    const std::function<std::optional<std::size_t>(const LabelRow &)> &pick) {
    std::map<std::string, std::vector<double>> ranks;
    for (const auto &run : runs) {
        for (const auto &row : run.table.rows) {
            if (auto r = pick(row)) ranks[row.label].push_back(static_cast<double>(*r));
        }
    }
    std::map<std::string, LabelRankStats> out;
    for (const auto &[label, xs] : ranks) {
        LabelRankStats s;
        s.present = xs.size();
        for (double x : xs) s.mean_rank += x;
        s.mean_rank /= static_cast<double>(xs.size());
        for (double x : xs) s.variance += (x - s.mean_rank) * (x - s.mean_rank);
        s.variance /= static_cast<double>(xs.size());
        out[label] = s;
    }
    return out;
}

std::vector<std::vector<std::size_t>> overlap_matrix(
    const std::vector<StabilityRun> &runs,
    std::vector<std::string> StabilityRun::*side) {
    std::size_t n = runs.size();
    std::vector<std::vector<std::size_t>> m(n, std::vector<std::size_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) m[i][j] = overlap_count(runs[i].*side, runs[j].*side);
    }
    return m;
}

}  // namespace

StabilityReport bootstrap_stability(const TokenizedCorpus &corpus, const PipelineConfig &config,
                                    const PipelineResources &resources, std::size_t n_runs,
                                    double fraction, std::uint64_t seed) {
    if (n_runs < 2) throw ArgumentError("bootstrap stability needs at least two runs");
    StabilityReport report;
    for (std::size_t i = 0; i < n_runs; ++i) {
        StabilityRun run;
        run.index = i;
        // Only the sample differs between runs; training and clustering reuse
        // the master seed.
        run.seed = derive_seed(stage_seed(seed, SeedStream::kBootstrap), i);
        try {
            auto sample = bootstrap_sample(corpus, fraction, run.seed);
            run.comments = sample.comment_count();
            auto model = obtain_model(config, &sample, seed);
            auto a = analyze(model, resources, config, seed);
            run.table = std::move(a.table);
            run.top1 = top_labels(a.labeled1);
            run.top2 = top_labels(a.labeled2);
        } catch (const std::exception &e) {
            throw StageError(fmt::format("bootstrap run {}", i), e.what());
        }
        spdlog::info("bootstrap run {}/{} done ({} comments)", i + 1, n_runs, run.comments);
        report.runs.push_back(std::move(run));
    }
    report.side1 = rank_stats(report.runs, [](const LabelRow &r) { return r.rank1; });
    report.side2 = rank_stats(report.runs, [](const LabelRow &r) { return r.rank2; });
    report.overlap1 = overlap_matrix(report.runs, &StabilityRun::top1);
    report.overlap2 = overlap_matrix(report.runs, &StabilityRun::top2);
    return report;
}

std::string stability_json(const StabilityReport &report) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["runs"] = ordered_json::array();
    for (const auto &run : report.runs) {
        j["runs"].push_back({{"index", run.index},
                             {"seed", run.seed},
                             {"comments", run.comments},
                             {"top1", run.top1},
                             {"top2", run.top2},
                             {"table", ordered_json::parse(label_table_json(run.table))}});
    }
    auto stats = [](const std::map<std::string, LabelRankStats> &m) {
        ordered_json o = ordered_json::object();
        for (const auto &[label, s] : m) {
            o[label] = {{"present", s.present}, {"mean_rank", s.mean_rank},
                        {"variance", s.variance}};
        }
        return o;
    };
    j["side1"] = stats(report.side1);
    j["side2"] = stats(report.side2);
    j["overlap1"] = report.overlap1;
    j["overlap2"] = report.overlap2;
    return j.dump(2);
}

GranularityReport granularity_sweep(const EmbeddingModel &model,
                                    std::span<const std::string> words,
                                    std::span<const double> r_values,
                                    const SemanticLexicon &lex,
                                    const SentimentLexicon &sentiment, std::uint64_t seed,
                                    TagMode mode) {
    GranularityReport report;
    std::vector<std::vector<std::string>> tops;
    for (double r : r_values) {
        auto partition = kmeans_partition(model, words, r, seed);
        auto labeled = label_clusters(partition, lex, sentiment, mode);
        GranularityCell cell;
        cell.r = r;
        cell.clusters = partition.size();
        cell.intra_similarity = intra_similarity(model, partition);
        auto ranks = rank_labels(labeled);
        cell.unique_labels = ranks.size();
        std::vector<std::string> top;
        for (const auto &lr : ranks) {
            if (cell.top.size() == 10) break;
            cell.top.emplace_back(lr.label, static_cast<double>(lr.clusters) /
                                                static_cast<double>(cell.clusters));
            top.push_back(lr.label);
        }
        if (!report.cells.empty() && cell.unique_labels < report.cells.back().unique_labels) {
            report.unique_labels_non_decreasing = false;
        }
        if (!tops.empty()) report.adjacent_top_overlap.push_back(overlap_count(tops.back(), top));
        tops.push_back(std::move(top));
        report.cells.push_back(std::move(cell));
    }
    return report;
}

std::string granularity_json(const GranularityReport &report) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["cells"] = ordered_json::array();
    for (const auto &c : report.cells) {
        ordered_json top = ordered_json::array();
        for (const auto &[label, share] : c.top) top.push_back({{"label", label}, {"share", share}});
        j["cells"].push_back({{"r", c.r},
                              {"clusters", c.clusters},
                              {"unique_labels", c.unique_labels},
                              {"intra_similarity", c.intra_similarity},
                              {"top", top}});
    }
    j["unique_labels_non_decreasing"] = report.unique_labels_non_decreasing;
    j["adjacent_top_overlap"] = report.adjacent_top_overlap;
    return j.dump(2);
}

std::vector<MinCountCell> min_count_sweep(const TokenizedCorpus &corpus,
                                          std::span<const std::uint64_t> thresholds,
                                          const PipelineConfig &config,
                                          const PipelineResources &resources) {
    std::vector<std::uint64_t> sorted(thresholds.begin(), thresholds.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<MinCountCell> cells;
    for (auto threshold : sorted) {
        MinCountCell cell;
        cell.threshold = threshold;
        PipelineConfig cfg = config;
        cfg.train.min_count = threshold;
        try {
            auto model = obtain_model(cfg, &corpus, cfg.seed);
            cell.vocab_size = model.size();
            for (std::size_t i = 0; i < model.size(); ++i) {
                if (cfg.pos.empty() || cfg.pos.count(pos_tag(resources.pos, model.vocab().word(i)))) {
                    ++cell.tagged_vocab_size;
                }
            }
            auto a = analyze(model, resources, cfg, cfg.seed);
            cell.top1 = top_labels(a.labeled1);
            cell.top2 = top_labels(a.labeled2);
            cell.ok = true;
        } catch (const std::exception &e) {
            cell.error = e.what();
            spdlog::warn("min_count {}: {}", threshold, cell.error);
        }
        cells.push_back(std::move(cell));
    }
    // Overlaps are relative to the first successful (smallest) threshold.
    auto ref = std::find_if(cells.begin(), cells.end(), [](const auto &c) { return c.ok; });
    if (ref != cells.end()) {
        for (auto &cell : cells) {
            if (!cell.ok) continue;
            cell.overlap1 = overlap_count(ref->top1, cell.top1);
            cell.overlap2 = overlap_count(ref->top2, cell.top2);
        }
    }
    return cells;
}

std::string min_count_json(const std::vector<MinCountCell> &cells) {
    using nlohmann::ordered_json;
    ordered_json j = ordered_json::array();
    for (const auto &c : cells) {
        ordered_json o = {{"threshold", c.threshold}, {"ok", c.ok}};
        if (!c.ok) {
            o["error"] = c.error;
        } else {
            o["vocab_size"] = c.vocab_size;
            o["tagged_vocab_size"] = c.tagged_vocab_size;
            o["top1"] = c.top1;
            o["top2"] = c.top2;
            o["overlap1"] = c.overlap1;
            o["overlap2"] = c.overlap2;
        }
        j.push_back(std::move(o));
    }
    return j.dump(2);
}

}  // namespace cbias
