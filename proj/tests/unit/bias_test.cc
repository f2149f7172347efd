#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "cbias/bias.h"
#include "cbias/errors.h"
#include "oracles.h"
#include "test_helpers.h"

using namespace cbias;
using cbias::testing::model_from;
using cbias::testing::TempDir;

namespace {

const TargetSet kS1 = TargetSet::make("one", {"t1"});
const TargetSet kS2 = TargetSet::make("two", {"t2"});

// Toy plane: t1 on the x axis, t2 on the y axis.
EmbeddingModel toy() {
    return model_from({{"t1", {1, 0}}, {"t2", {0, 1}}, {"w", {1, 0}}, {"v", {1, 1}}});
}

struct RandomCase {
    EmbeddingModel model;
    TargetSet s1, s2;
    PosLexicon lex;
    std::map<std::string, PosTag> tags;
};

RandomCase random_case(Rng &rng, std::size_t n, std::size_t d) {
    auto model = cbias::testing::random_model(rng, n, d);
    std::vector<std::string> a, b;
    std::size_t na = 1 + rng.below(5), nb = 1 + rng.below(5);
    for (std::size_t i = 0; i < na; ++i) a.push_back(model.vocab().word(rng.below(n)));
    for (std::size_t i = 0; i < nb; ++i) b.push_back(model.vocab().word(rng.below(n)));
    PosLexicon lex;
    std::map<std::string, PosTag> tags;
    const PosTag all[] = {PosTag::kNoun, PosTag::kAdjective, PosTag::kVerb, PosTag::kOther};
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.below(5) == 0) continue;  // untagged -> other
        PosTag t = all[rng.below(4)];
        lex.add_word(model.vocab().word(i), t);
        tags[model.vocab().word(i)] = t;
    }
    return {std::move(model), TargetSet::make("a", a), TargetSet::make("b", b), std::move(lex),
            std::move(tags)};
}

}  // namespace

TEST(TargetSetTest, LowercasesAndDeduplicates) {
    auto s = TargetSet::make("x", {"She", "she", "HER"});
    EXPECT_EQ(s.words, (std::vector<std::string>{"she", "her"}));
    EXPECT_THROW(TargetSet::make("x", {}), ArgumentError);
}

TEST(TargetSetTest, JsonRoundTripAndBundledSets) {
    TempDir dir;
    auto s = TargetSet::make("pair", {"a", "b"});
    write_file(dir / "s.json", target_set_json(s));
    auto back = load_target_set(dir / "s.json");
    EXPECT_EQ(back.name, "pair");
    EXPECT_EQ(back.words, s.words);
    auto female = load_target_set(cbias::testing::data_dir() / "targets" / "female.json");
    EXPECT_EQ(female.words.size(), 8u);
    write_file(dir / "bad.json", "[1, 2]");
    EXPECT_THROW(load_target_set(dir / "bad.json"), FormatError);
}

TEST(BiasScore, ToyModel) {
    auto m = toy();
    EXPECT_NEAR(bias_score(m, "w", kS1, kS2), 1.0, 1e-12);
    EXPECT_NEAR(bias_score(m, "v", kS1, kS2), 0.0, 1e-12);
    EXPECT_THROW(bias_score(m, "zzz", kS1, kS2), LookupError);
}

TEST(BiasScore, IdenticalSetsGiveZero) {
    Rng rng(1);
    auto m = cbias::testing::random_model(rng, 20, 5);
    auto s = TargetSet::make("s", {"w0", "w1"});
    for (const auto &w : m.vocab().words()) EXPECT_EQ(bias_score(m, w, s, s), 0.0);
}

TEST(BiasScore, DegenerateTargetSetPropagates) {
    auto m = toy();
    EXPECT_THROW(bias_score(m, "w", TargetSet::make("x", {"nope"}), kS2), TargetSetError);
}

TEST(BiasScore, MatchesOracle) {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        auto c = random_case(rng, 60, 8);
        for (std::size_t i = 0; i < c.model.size(); i += 7) {
            const auto &w = c.model.vocab().word(i);
            EXPECT_NEAR(bias_score(c.model, w, c.s1, c.s2),
                        cbias::testing::oracle_bias(c.model, w, c.s1.words, c.s2.words), 1e-9);
        }
    }
}

TEST(BiasScore, AntisymmetricAndScaleInvariant) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        auto m = cbias::testing::quantized_model(rng, 30, 6);
        auto s1 = TargetSet::make("a", {"w0", "w1", "w2"});
        auto s2 = TargetSet::make("b", {"w3", "w4"});
        std::size_t wi = 5 + rng.below(25);
        const auto &w = m.vocab().word(wi);
        double fwd = bias_score(m, w, s1, s2);
        EXPECT_NEAR(fwd, -bias_score(m, w, s2, s1), 1e-9);
        auto scaled = cbias::testing::scale_row(m, wi, cbias::testing::exact_scale(rng));
        EXPECT_NEAR(fwd, bias_score(scaled, w, s1, s2), 1e-9);
    }
}

TEST(PosTagging, LexiconSuffixAndDefault) {
    PosLexicon lex;
    lex.add_word("happy", PosTag::kAdjective);
    lex.add_suffix_rule("ly", PosTag::kOther);
    lex.add_suffix_rule("able", PosTag::kAdjective);
    lex.add_suffix_rule("ble", PosTag::kNoun);
    EXPECT_EQ(pos_tag(lex, "happy"), PosTag::kAdjective);
    EXPECT_EQ(pos_tag(lex, "fuckable"), PosTag::kAdjective);
    EXPECT_EQ(pos_tag(lex, "bubble"), PosTag::kNoun);
    EXPECT_EQ(pos_tag(lex, "xyz"), PosTag::kOther);
    EXPECT_EQ(lex.suffix_rules().front().first, "able");
}

TEST(PosTagging, TagNames) {
    EXPECT_EQ(parse_pos_tags("adjective,noun"),
              (std::set<PosTag>{PosTag::kAdjective, PosTag::kNoun}));
    EXPECT_TRUE(parse_pos_tags("").empty());
    EXPECT_THROW(parse_pos_tag("adverbial"), FormatError);
    EXPECT_EQ(to_string(PosTag::kVerb), "verb");
}

TEST(PosTagging, BundledLexiconAgreesWithFile) {
    auto path = cbias::testing::data_dir() / "lexicons" / "pos.tsv";
    auto lex = PosLexicon::load(path, cbias::testing::data_dir() / "lexicons" / "pos_suffix.tsv");
    std::ifstream in(path);
    std::string line;
    std::size_t checked = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        EXPECT_EQ(lex.tag(line.substr(0, tab)), parse_pos_tag(line.substr(tab + 1))) << line;
        ++checked;
    }
    EXPECT_GE(checked, 1000u);
    EXPECT_EQ(checked, lex.size());
}

TEST(PosTagging, BadFileLine) {
    TempDir dir;
    write_file(dir / "p.tsv", "good\tnoun\nbad line\n");
    try {
        PosLexicon::load(dir / "p.tsv");
        FAIL();
    } catch (const FormatError &e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(RankBiased, ToySingleCandidate) {
    auto m = model_from({{"t1", {1, 0}}, {"t2", {0, 1}}, {"w", {1, 0}}});
    PosLexicon lex;
    auto r = rank_biased(m, kS1, kS2, lex, {}, 1);
    ASSERT_EQ(r.entries.size(), 1u);
    EXPECT_EQ(r.entries[0].word, "w");
    EXPECT_EQ(r.entries[0].frequency, 98u);
    EXPECT_FALSE(r.truncated);
}

TEST(RankBiased, TruncatedWhenTooFewCandidates) {
    PosLexicon lex;
    auto r = rank_biased(toy(), kS1, kS2, lex, {}, 10);
    EXPECT_EQ(r.entries.size(), 2u);
    EXPECT_TRUE(r.truncated);
    EXPECT_THROW(rank_biased(toy(), kS1, kS2, lex, {}, 0), ArgumentError);
}

TEST(RankBiased, TiesBrokenByFrequencyThenWord) {
    // Three words with identical vectors; counts 98, 97, 96 then a same-count pair.
    Vocabulary v;
    v.add("t1", 5);
    v.add("t2", 5);
    v.add("b", 3);
    v.add("a", 3);
    v.add("c", 9);
    std::vector<float> m = {1, 0, 0, 1, 1, 0, 1, 0, 1, 0};
    EmbeddingModel model(std::move(v), 2, std::move(m));
    PosLexicon lex;
    auto r = rank_biased(model, kS1, kS2, lex, {}, 3);
    EXPECT_EQ(r.words(), (std::vector<std::string>{"c", "a", "b"}));
}

TEST(RankBiased, PosFilterAndTargetExclusion) {
    auto m = toy();
    PosLexicon lex;
    lex.add_word("w", PosTag::kNoun);
    lex.add_word("v", PosTag::kAdjective);
    auto r = rank_biased(m, kS1, kS2, lex, {PosTag::kAdjective}, 10);
    EXPECT_EQ(r.words(), (std::vector<std::string>{"v"}));
    for (const auto &e : rank_biased(m, kS1, kS2, lex, {}, 10).entries) {
        EXPECT_NE(e.word, "t1");
        EXPECT_NE(e.word, "t2");
    }
}

TEST(RankBiased, MatchesFullScanOracle) {
    Rng rng(4);
    for (int t = 0; t < 25; ++t) {
        std::size_t n = 20 + rng.below(480), d = 2 + rng.below(31);
        auto c = random_case(rng, n, d);
        std::set<PosTag> allowed;
        if (rng.below(2)) allowed = {PosTag::kAdjective, PosTag::kNoun};
        std::size_t k = 1 + rng.below(n);
        auto got = rank_biased(c.model, c.s1, c.s2, c.lex, allowed, k);
        auto want = cbias::testing::oracle_ranking(c.model, c.s1.words, c.s2.words, c.tags,
                                                   allowed, k,
                                                   cbias::testing::OracleScore::kCentroid);
        ASSERT_EQ(got.entries.size(), want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            EXPECT_EQ(got.entries[i].word, want[i].first) << "case " << t << " pos " << i;
            EXPECT_NEAR(got.entries[i].bias, want[i].second, 1e-9);
        }
    }
}

TEST(RankBiased, OrderUnchangedByScalingOneVector) {
    Rng rng(5);
    auto c = random_case(rng, 80, 10);
    auto before = rank_biased(c.model, c.s1, c.s2, c.lex, {}, 80).words();
    std::size_t wi = 0;
    while (std::count(c.s1.words.begin(), c.s1.words.end(), c.model.vocab().word(wi)) ||
           std::count(c.s2.words.begin(), c.s2.words.end(), c.model.vocab().word(wi)))
        ++wi;
    auto scaled = cbias::testing::scale_row(c.model, wi, 4.0f);
    EXPECT_EQ(rank_biased(scaled, c.s1, c.s2, c.lex, {}, 80).words(), before);
}

TEST(Distribution, CurvesAreMonotoneAndConsistent) {
    Rng rng(6);
    auto c = random_case(rng, 150, 12);
    std::set<PosTag> allowed{PosTag::kAdjective};
    auto dist = bias_distribution(c.model, c.s1, c.s2, c.lex, allowed);
    for (const auto *curve : {&dist.toward_s1, &dist.toward_s2}) {
        for (std::size_t i = 1; i < curve->entries.size(); ++i)
            EXPECT_GE(curve->entries[i - 1].bias, curve->entries[i].bias);
    }
    auto top = rank_biased(c.model, c.s1, c.s2, c.lex, allowed, 1);
    EXPECT_EQ(dist.toward_s1.entries.front().word, top.entries.front().word);
    // Same words, negated scores.
    ASSERT_EQ(dist.toward_s1.entries.size(), dist.toward_s2.entries.size());
    double sum1 = 0, sum2 = 0;
    for (const auto &e : dist.toward_s1.entries) sum1 += e.bias;
    for (const auto &e : dist.toward_s2.entries) sum2 += e.bias;
    EXPECT_NEAR(sum1, -sum2, 1e-9);
    EXPECT_FALSE(dist.toward_s1.truncated);
}

TEST(RankingCsv, WriteAndReadBack) {
    TempDir dir;
    PosLexicon lex;
    auto r = rank_biased(toy(), kS1, kS2, lex, {}, 2);
    auto csv = ranking_csv(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "rank,word,bias,frequency");
    write_file(dir / "r.csv", "# config_hash=x\n" + csv);
    EXPECT_EQ(read_ranking_words(dir / "r.csv"), r.words());
    write_file(dir / "bad.csv", "a,b\n1,2\n");
    EXPECT_THROW(read_ranking_words(dir / "bad.csv"), FormatError);
}
