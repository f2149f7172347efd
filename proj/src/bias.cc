#include "cbias/bias.h"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cbias/errors.h"
#include "cbias/util.h"

namespace cbias {

TargetSet TargetSet::make(std::string name, std::vector<std::string> words) {
    TargetSet set;
    set.name = std::move(name);
    std::unordered_set<std::string> seen;
    for (auto &w : words) {
        std::string lw = to_lower(trim(w));
        if (lw.empty()) continue;
        if (seen.insert(lw).second) set.words.push_back(std::move(lw));
    }
    if (set.words.empty()) {
        throw ArgumentError("target set '" + set.name + "' has no words");
    }
    return set;
}

TargetSet load_target_set(const std::filesystem::path &path) {
    auto doc = nlohmann::json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("words") ||
        !doc["words"].is_array()) {
        throw FormatError(path.string() + ": expected {\"name\": ..., \"words\": [...]}");
    }
    std::string name = doc.value("name", path.stem().string());
    std::vector<std::string> words;
    for (const auto &w : doc["words"]) {
        if (!w.is_string()) throw FormatError(path.string() + ": words must be strings");
        words.push_back(w.get<std::string>());
    }
    return TargetSet::make(std::move(name), std::move(words));
}

std::string target_set_json(const TargetSet &set) {
    return nlohmann::json{{"name", set.name}, {"words", set.words}}.dump(2);
}

PosTag parse_pos_tag(std::string_view name) {
    std::string n = to_lower(trim(name));
    if (n == "noun" || n == "n" || n == "nn") return PosTag::kNoun;
    if (n == "adjective" || n == "adj" || n == "a" || n == "jj") return PosTag::kAdjective;
    if (n == "verb" || n == "v" || n == "vb") return PosTag::kVerb;
    if (n == "other" || n == "x") return PosTag::kOther;
    throw FormatError("unknown part-of-speech tag '" + std::string(name) + "'");
}

std::string_view to_string(PosTag tag) {
    switch (tag) {
    case PosTag::kNoun: return "noun";
    case PosTag::kAdjective: return "adjective";
    case PosTag::kVerb: return "verb";
    case PosTag::kOther: return "other";
    }
    return "other";
}

std::set<PosTag> parse_pos_tags(std::string_view list) {
    std::set<PosTag> tags;
    for (const auto &part : split(list, ',')) {
        if (trim(part).empty()) continue;
        tags.insert(parse_pos_tag(part));
    }
    return tags;
}

std::string to_string(const std::set<PosTag> &tags) {
    std::string out;
    for (PosTag t : tags) {
        if (!out.empty()) out += ',';
        out += to_string(t);
    }
    return out;
}

void PosLexicon::add_word(std::string word, PosTag tag) {
    words_.insert_or_assign(to_lower(word), tag);
}

void PosLexicon::add_suffix_rule(std::string suffix, PosTag tag) {
    auto pos = std::find_if(rules_.begin(), rules_.end(), [&](const auto &r) {
        return r.first.size() < suffix.size();
    });
    rules_.insert(pos, {to_lower(suffix), tag});
}

std::optional<PosTag> PosLexicon::lexicon_tag(std::string_view word) const {
    auto it = words_.find(to_lower(word));
    if (it == words_.end()) return std::nullopt;
    return it->second;
}

PosTag PosLexicon::tag(std::string_view word) const {
    std::string w = to_lower(word);
    if (auto it = words_.find(w); it != words_.end()) return it->second;
    for (const auto &[suffix, tag] : rules_) {
        if (w.size() > suffix.size() && w.ends_with(suffix)) return tag;
    }
    return PosTag::kOther;
}

namespace {

template <class Fn>
void read_tsv(const std::filesystem::path &path, Fn &&fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError(path.string() + ": expected two tab-separated columns", line_no);
        }
        try {
            fn(std::string(trim(line.substr(0, tab))), std::string(trim(line.substr(tab + 1))));
        } catch (const FormatError &e) {
            throw FormatError(path.string() + ": " + e.what(), line_no);
        }
    }
}

}  // namespace

PosLexicon PosLexicon::load(const std::filesystem::path &lexicon,
                            const std::filesystem::path &suffix_rules) {
    PosLexicon lex;
    read_tsv(lexicon, [&](std::string w, std::string t) {
        lex.add_word(std::move(w), parse_pos_tag(t));
    });
    if (!suffix_rules.empty()) {
        read_tsv(suffix_rules, [&](std::string s, std::string t) {
            lex.add_suffix_rule(std::move(s), parse_pos_tag(t));
        });
    }
    return lex;
}

PosTag pos_tag(const PosTagger &tagger, std::string_view word) { return tagger.tag(word); }

BiasScorer::BiasScorer(const EmbeddingModel &model, const TargetSet &s1,
                       const TargetSet &s2)
    : model_(model), c1_(centroid(model, s1.words)), c2_(centroid(model, s2.words)) {
    for (const auto *c : {&c1_, &c2_}) {
        if (!c->missing.empty()) {
            spdlog::warn("{} target words out of vocabulary (skipped)", c->missing.size());
        }
    }
}

double BiasScorer::score(std::size_t word_index) const {
    auto v = model_.row(word_index);
    return cosine(v, std::span<const double>(c1_.vector)) -
           cosine(v, std::span<const double>(c2_.vector));
}

double BiasScorer::score(std::string_view word) const {
    auto i = model_.lookup(word);
    if (!i) throw LookupError("word '" + std::string(word) + "' not in vocabulary");
    return score(*i);
}

double bias_score(const EmbeddingModel &model, std::string_view word,
                  const TargetSet &s1, const TargetSet &s2) {
    if (!model.lookup(word)) {
        throw LookupError("word '" + std::string(word) + "' not in vocabulary");
    }
    return BiasScorer(model, s1, s2).score(word);
}

std::vector<std::string> BiasRanking::words() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto &e : entries) out.push_back(e.word);
    return out;
}

BiasRanking rank_by_score(const EmbeddingModel &model, const TargetSet &s1,
                          const TargetSet &s2, const PosTagger &tagger,
                          const std::set<PosTag> &allowed, std::size_t k,
                          const std::function<double(std::size_t)> &score) {
    if (k == 0) throw ArgumentError("k must be at least 1");
    std::unordered_set<std::string> excluded;
    for (const auto *set : {&s1, &s2}) {
        for (const auto &w : set->words) excluded.insert(to_lower(w));
    }
    const auto &vocab = model.vocab();
    std::vector<BiasEntry> candidates;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        const auto &w = vocab.word(i);
        if (excluded.count(to_lower(w))) continue;
        if (!allowed.empty() && !allowed.count(tagger.tag(w))) continue;
        candidates.push_back({w, score(i), vocab.count(i)});
    }
    auto better = [](const BiasEntry &a, const BiasEntry &b) {
        if (a.bias != b.bias) return a.bias > b.bias;
        if (a.frequency != b.frequency) return a.frequency > b.frequency;
        return a.word < b.word;
    };
    BiasRanking ranking;
    ranking.target = s1.name;
    ranking.contrast = s2.name;
    ranking.pos_filter = allowed;
    ranking.k = k;
    if (candidates.size() < k) {
        ranking.truncated = true;
        if (k != SIZE_MAX) {
            spdlog::warn("only {} candidates for top-{} ranking toward '{}'",
                         candidates.size(), k, s1.name);
        }
        std::sort(candidates.begin(), candidates.end(), better);
    } else {
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(k),
                          candidates.end(), better);
        candidates.resize(k);
    }
    ranking.entries = std::move(candidates);
    for (const auto *set : {&s1, &s2}) {
        for (const auto &w : set->words) {
            if (!model.lookup(w)) ranking.missing_targets.push_back(w);
        }
    }
    return ranking;
}

BiasRanking rank_biased(const EmbeddingModel &model, const TargetSet &s1,
                        const TargetSet &s2, const PosTagger &tagger,
                        const std::set<PosTag> &allowed, std::size_t k) {
    BiasScorer scorer(model, s1, s2);
    return rank_by_score(model, s1, s2, tagger, allowed, k,
                         [&](std::size_t i) { return scorer.score(i); });
}

BiasDistribution bias_distribution(const EmbeddingModel &model, const TargetSet &s1,
                                   const TargetSet &s2, const PosTagger &tagger,
                                   const std::set<PosTag> &allowed) {
    BiasScorer scorer(model, s1, s2);
    auto forward = [&](std::size_t i) { return scorer.score(i); };
    auto backward = [&](std::size_t i) { return -scorer.score(i); };
    BiasDistribution dist{
        rank_by_score(model, s1, s2, tagger, allowed, SIZE_MAX, forward),
        rank_by_score(model, s2, s1, tagger, allowed, SIZE_MAX, backward)};
    dist.toward_s1.truncated = dist.toward_s2.truncated = false;
    return dist;
}

std::string ranking_csv(const BiasRanking &ranking) {
    std::string out = "rank,word,bias,frequency\n";
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        const auto &e = ranking.entries[i];
        fmt::format_to(std::back_inserter(out), "{},{},{:.6f},{}\n", i + 1,
                       csv_field(e.word), e.bias, e.frequency);
    }
    return out;
}

std::string distribution_csv(const BiasDistribution &dist) {
    std::string out = "direction,rank,word,bias\n";
    for (const auto *r : {&dist.toward_s1, &dist.toward_s2}) {
        for (std::size_t i = 0; i < r->entries.size(); ++i) {
            fmt::format_to(std::back_inserter(out), "{},{},{},{:.6f}\n",
                           csv_field(r->target), i + 1, csv_field(r->entries[i].word),
                           r->entries[i].bias);
        }
    }
    return out;
}

std::vector<std::string> read_ranking_words(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::vector<std::string> words;
    std::optional<std::size_t> column;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = csv_split(line);
        if (!column) {
            auto it = std::find(fields.begin(), fields.end(), "word");
            if (it == fields.end()) throw FormatError("ranking CSV lacks a 'word' column", line_no);
            column = static_cast<std::size_t>(it - fields.begin());
            continue;
        }
        if (fields.size() <= *column) throw FormatError("short ranking CSV row", line_no);
        words.push_back(fields[*column]);
    }
    return words;
}

}  // namespace cbias
