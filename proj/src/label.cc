#include "cbias/label.h"

#include <algorithm>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

#include "cbias/errors.h"
#include "cbias/util.h"

namespace cbias {

void SemanticLexicon::add(std::string word, std::vector<std::string> labels) {
    for (const auto &l : labels) inventory_.insert(l);
    words_.insert_or_assign(to_lower(word), std::move(labels));
}

const std::vector<std::string> *SemanticLexicon::labels(std::string_view word) const {
    auto it = words_.find(to_lower(word));
    return it == words_.end() ? nullptr : &it->second;
}

SemanticLexicon SemanticLexicon::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    SemanticLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError(path.string() + ": expected word<TAB>labels", line_no);
        }
        std::vector<std::string> labels;
        for (const auto &l : split(std::string_view(line).substr(tab + 1), '|')) {
            auto t = trim(l);
            if (!t.empty()) labels.emplace_back(t);
        }
        if (labels.empty()) throw FormatError(path.string() + ": word without labels", line_no);
        lex.add(std::string(trim(line.substr(0, tab))), std::move(labels));
    }
    return lex;
}

LabelCounts tag_cluster(const SemanticLexicon &lex, std::span<const std::string> cluster,
                        TagMode mode) {
    LabelCounts counts;
    for (const auto &w : cluster) {
        const auto *labels = lex.labels(w);
        if (!labels || labels->empty()) continue;
        if (mode == TagMode::kFirstLabel) {
            ++counts[labels->front()];
        } else {
            for (const auto &l : *labels) ++counts[l];
        }
    }
    return counts;
}

std::string_view to_string(LabelSource source) {
    return source == LabelSource::kDirect ? "direct" : "propagated";
}

LabeledPartition label_clusters(const ClusterPartition &partition,
                                const SemanticLexicon &lex,
                                const SentimentLexicon &sentiment, TagMode mode,
                                std::string target) {
    LabeledPartition out;
    out.target = std::move(target);
    const std::size_t k = partition.clusters.size();
    out.clusters.resize(k);
    std::vector<std::size_t> untagged;
    std::vector<std::size_t> direct;
    for (std::size_t c = 0; c < k; ++c) {
        auto &lc = out.clusters[c];
        lc.words = partition.clusters[c];
        lc.centroid = partition.centroids.at(c);
        lc.sentiment = set_sentiment(sentiment, lc.words);
        auto counts = tag_cluster(lex, lc.words, mode);
        if (counts.empty()) {
            untagged.push_back(c);
            continue;
        }
        std::size_t top = 0;
        for (const auto &[label, n] : counts) top = std::max(top, n);
        for (const auto &[label, n] : counts) {
            if (n == top) lc.labels.push_back(label);
        }
        lc.source = LabelSource::kDirect;
        direct.push_back(c);
    }
    if (direct.empty()) {
        throw LabelingError("no cluster contains a word known to the semantic lexicon");
    }
    std::stable_sort(untagged.begin(), untagged.end(), [&](std::size_t a, std::size_t b) {
        return out.clusters[a].words.size() > out.clusters[b].words.size();
    });
    for (std::size_t c : untagged) {
        std::size_t donor = direct.front();
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t d : direct) {
            double sim = cosine(std::span<const double>(out.clusters[c].centroid),
                                std::span<const double>(out.clusters[d].centroid));
            if (sim > best) {
                best = sim;
                donor = d;
            }
        }
        auto &lc = out.clusters[c];
        lc.labels = out.clusters[donor].labels;
        lc.source = LabelSource::kPropagated;
        lc.donor = donor;
    }
    return out;
}

bool label_rank_before(const LabelRank &a, const LabelRank &b) {
    if (a.clusters != b.clusters) return a.clusters > b.clusters;
    if (a.words != b.words) return a.words > b.words;
    return a.label < b.label;
}

namespace {

struct LabelStats {
    std::size_t clusters = 0;
    std::size_t words = 0;
    double sentiment_sum = 0.0;       // over clusters
    double word_sentiment_sum = 0.0;  // cluster sentiment weighted by size
};

std::map<std::string, LabelStats> label_stats(const LabeledPartition &labeled) {
    std::map<std::string, LabelStats> stats;
    for (const auto &c : labeled.clusters) {
        for (const auto &l : c.labels) {
            auto &s = stats[l];
            ++s.clusters;
            s.words += c.words.size();
            s.sentiment_sum += c.sentiment;
            s.word_sentiment_sum += c.sentiment * static_cast<double>(c.words.size());
        }
    }
    return stats;
}

}  // namespace

std::vector<LabelRank> rank_labels(const LabeledPartition &labeled) {
    std::vector<LabelRank> ranks;
    for (const auto &[label, s] : label_stats(labeled)) {
        ranks.push_back({label, 0, s.clusters, s.words});
    }
    std::sort(ranks.begin(), ranks.end(), label_rank_before);
    for (std::size_t i = 0; i < ranks.size(); ++i) ranks[i].rank = i + 1;
    return ranks;
}

LabelRankTable compare_targets(const LabeledPartition &side1, const LabeledPartition &side2,
                               std::string name1, std::string name2) {
    LabelRankTable table{std::move(name1), std::move(name2), {}};
    auto stats1 = label_stats(side1);
    auto stats2 = label_stats(side2);
    std::map<std::string, LabelRow> rows;
    for (const auto &r : rank_labels(side1)) {
        auto &row = rows[r.label];
        row.label = r.label;
        row.rank1 = r.rank;
        const auto &s = stats1[r.label];
        row.clusters1 = s.clusters;
        row.words1 = s.words;
        row.sent1 = s.sentiment_sum / static_cast<double>(s.clusters);
        row.word_sent1 = s.word_sentiment_sum / static_cast<double>(s.words);
    }
    for (const auto &r : rank_labels(side2)) {
        auto &row = rows[r.label];
        row.label = r.label;
        row.rank2 = r.rank;
        const auto &s = stats2[r.label];
        row.clusters2 = s.clusters;
        row.words2 = s.words;
        row.sent2 = s.sentiment_sum / static_cast<double>(s.clusters);
        row.word_sent2 = s.word_sentiment_sum / static_cast<double>(s.words);
    }
    for (auto &[label, row] : rows) {
        bool use_first = row.rank1 && (!row.rank2 || *row.rank1 <= *row.rank2);
        row.sent_w = use_first ? *row.sent1 : *row.sent2;
        table.rows.push_back(std::move(row));
    }
    auto best = [](const LabelRow &r) {
        return std::min(r.rank1.value_or(SIZE_MAX), r.rank2.value_or(SIZE_MAX));
    };
    std::sort(table.rows.begin(), table.rows.end(), [&](const LabelRow &a, const LabelRow &b) {
        if (best(a) != best(b)) return best(a) < best(b);
        return a.label < b.label;
    });
    return table;
}

ConceptMap load_concept_map(const std::filesystem::path &path) {
    auto doc = nlohmann::ordered_json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw FormatError(path.string() + ": concept map must be a JSON object");
    }
    ConceptMap map;
    for (const auto &[name, labels] : doc.items()) {
        if (!labels.is_array()) {
            throw FormatError(path.string() + ": concept '" + name + "' must map to a list");
        }
        map.emplace_back(name, labels.get<std::vector<std::string>>());
    }
    return map;
}

std::vector<ConceptCount> concept_frequency(const LabeledPartition &side1,
                                            const LabeledPartition &side2,
                                            const ConceptMap &concepts,
                                            const std::set<std::string> &inventory) {
    for (const auto &[name, labels] : concepts) {
        for (const auto &l : labels) {
            if (!inventory.count(l)) {
                throw ConfigError("concept '" + name + "' refers to unknown label '" + l + "'");
            }
        }
    }
    auto tally = [](const LabeledPartition &side, const std::vector<std::string> &labels,
                    std::size_t &clusters, std::size_t &words) {
        for (const auto &c : side.clusters) {
            bool hit = std::any_of(c.labels.begin(), c.labels.end(), [&](const auto &l) {
                return std::find(labels.begin(), labels.end(), l) != labels.end();
            });
            if (hit) {
                ++clusters;
                words += c.words.size();
            }
        }
    };
    std::vector<ConceptCount> out;
    for (const auto &[name, labels] : concepts) {
        ConceptCount cc;
        cc.concept_name = name;
        tally(side1, labels, cc.clusters1, cc.words1);
        tally(side2, labels, cc.clusters2, cc.words2);
        out.push_back(std::move(cc));
    }
    return out;
}

std::string labeled_partition_json(const LabeledPartition &labeled,
                                   const std::map<std::string, std::string> &meta) {
    nlohmann::ordered_json out;
    for (const auto &[key, value] : meta) out[key] = value;
    out["target"] = labeled.target;
    auto clusters = nlohmann::ordered_json::array();
    for (const auto &c : labeled.clusters) {
        nlohmann::ordered_json j;
        j["label"] = c.labels.empty() ? nlohmann::ordered_json(nullptr)
                                      : nlohmann::ordered_json(c.labels.front());
        j["labels"] = c.labels;
        j["label_source"] = std::string(to_string(c.source));
        j["donor"] = c.donor ? nlohmann::ordered_json(*c.donor) : nlohmann::ordered_json(nullptr);
        j["sentiment"] = c.sentiment;
        j["words"] = c.words;
        clusters.push_back(std::move(j));
    }
    out["clusters"] = std::move(clusters);
    return out.dump(2);
}

LabeledPartition parse_labeled_partition_json(std::string_view text,
                                              std::map<std::string, std::string> *meta) {
    auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("clusters")) {
        throw FormatError("labeled partition JSON must be an object with 'clusters'");
    }
    LabeledPartition out;
    out.target = doc.value("target", "");
    if (meta) {
        for (const auto &[key, value] : doc.items()) {
            if (value.is_string() && key != "target") (*meta)[key] = value.get<std::string>();
        }
    }
    for (const auto &c : doc["clusters"]) {
        LabeledCluster lc;
        lc.words = c.at("words").get<std::vector<std::string>>();
        lc.labels = c.at("labels").get<std::vector<std::string>>();
        lc.source = c.value("label_source", "direct") == "propagated" ? LabelSource::kPropagated
                                                                      : LabelSource::kDirect;
        if (c.contains("donor") && c["donor"].is_number()) lc.donor = c["donor"].get<std::size_t>();
        lc.sentiment = c.value("sentiment", 0.0);
        out.clusters.push_back(std::move(lc));
    }
    return out;
}

namespace {

std::string opt_rank(const std::optional<std::size_t> &r) {
    return r ? std::to_string(*r) : "-";
}

std::string opt_real(const std::optional<double> &v) {
    return v ? fmt::format("{:.6f}", *v) : "-";
}

}  // namespace

std::string label_table_csv(const LabelRankTable &table) {
    std::string out = fmt::format(
        "label,rank_{0},rank_{1},sent_w,sent_{0},sent_{1},word_sent_{0},word_sent_{1},"
        "clusters_{0},clusters_{1},words_{0},words_{1}\n",
        table.name1, table.name2);
    for (const auto &r : table.rows) {
        fmt::format_to(std::back_inserter(out), "{},{},{},{:.6f},{},{},{},{},{},{},{},{}\n",
                       csv_field(r.label), opt_rank(r.rank1), opt_rank(r.rank2), r.sent_w,
                       opt_real(r.sent1), opt_real(r.sent2), opt_real(r.word_sent1),
                       opt_real(r.word_sent2), r.clusters1, r.clusters2, r.words1, r.words2);
    }
    return out;
}

std::string label_table_json(const LabelRankTable &table,
                             const std::map<std::string, std::string> &meta) {
    nlohmann::ordered_json out;
    for (const auto &[key, value] : meta) out[key] = value;
    out["sides"] = {table.name1, table.name2};
    auto rows = nlohmann::ordered_json::array();
    auto opt = [](const auto &v) {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    for (const auto &r : table.rows) {
        nlohmann::ordered_json j;
        j["label"] = r.label;
        j["rank1"] = opt(r.rank1);
        j["rank2"] = opt(r.rank2);
        j["sent_w"] = r.sent_w;
        j["sent1"] = opt(r.sent1);
        j["sent2"] = opt(r.sent2);
        j["word_sent1"] = opt(r.word_sent1);
        j["word_sent2"] = opt(r.word_sent2);
        j["clusters1"] = r.clusters1;
        j["clusters2"] = r.clusters2;
        j["words1"] = r.words1;
        j["words2"] = r.words2;
        rows.push_back(std::move(j));
    }
    out["rows"] = std::move(rows);
    return out.dump(2);
}

std::string concept_frequency_csv(const std::vector<ConceptCount> &counts,
                                  std::string_view name1, std::string_view name2) {
    std::string out = fmt::format(
        "concept,clusters_{0},clusters_{1},words_{0},words_{1}\n", name1, name2);
    for (const auto &c : counts) {
        fmt::format_to(std::back_inserter(out), "{},{},{},{},{}\n", csv_field(c.concept_name),
                       c.clusters1, c.clusters2, c.words1, c.words2);
    }
    return out;
}

}  // namespace cbias
