#include <algorithm>
#include <fstream>
#include <map>

#include <gtest/gtest.h>

#include "cbias/errors.h"
#include "cbias/sentiment.h"
#include "oracles.h"
#include "test_helpers.h"

using namespace cbias;
using cbias::testing::TempDir;

TEST(Sentiment, LookupAndUnknown) {
    SentimentLexicon lex;
    lex.add("terrible", -0.7);
    EXPECT_EQ(word_sentiment(lex, "terrible"), -0.7);
    EXPECT_EQ(word_sentiment(lex, "table"), 0.0);
    EXPECT_THROW(lex.add("x", 1.5), ArgumentError);
}

TEST(Sentiment, SetMeanExamples) {
    SentimentLexicon lex;
    lex.add("good", 0.5);
    lex.add("bad", -0.5);
    lex.add("great", 0.9);
    EXPECT_EQ(set_sentiment(lex, std::vector<std::string>{"great"}), 0.9);
    EXPECT_EQ(set_sentiment(lex, std::vector<std::string>{"good", "bad"}), 0.0);
    // Unknown words count in the denominator.
    EXPECT_NEAR(set_sentiment(lex, std::vector<std::string>{"great", "chair"}), 0.45, 1e-15);
    EXPECT_THROW(set_sentiment(lex, std::vector<std::string>{}), ArgumentError);
}

TEST(Sentiment, BundledLexiconMatchesFile) {
    auto path = cbias::testing::data_dir() / "lexicons" / "sentiment.tsv";
    auto lex = SentimentLexicon::load(path);
    std::ifstream in(path);
    std::string line;
    std::size_t checked = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        EXPECT_EQ(word_sentiment(lex, line.substr(0, tab)), std::stod(line.substr(tab + 1)));
        ++checked;
    }
    EXPECT_GE(checked, 500u);
    EXPECT_EQ(lex.size(), checked);
    EXPECT_NE(lex.source().find("sentiment.tsv"), std::string::npos);
}

TEST(Sentiment, BadFiles) {
    TempDir dir;
    write_file(dir / "range.tsv", "ok\t0.5\nwild\t2\n");
    EXPECT_THROW(SentimentLexicon::load(dir / "range.tsv"), FormatError);
    write_file(dir / "nan.tsv", "ok\tabc\n");
    EXPECT_THROW(SentimentLexicon::load(dir / "nan.tsv"), FormatError);
    EXPECT_THROW(SentimentLexicon::load(dir / "missing.tsv"), IoError);
}

TEST(Sentiment, RandomSetsMatchOracleBoundedAndPermutationInvariant) {
    Rng rng(9);
    SentimentLexicon lex;
    std::map<std::string, double> ref;
    for (int i = 0; i < 300; ++i) {
        double s = rng.uniform() * 2 - 1;
        lex.add("w" + std::to_string(i), s);
        ref["w" + std::to_string(i)] = s;
    }
    for (int t = 0; t < 500; ++t) {
        std::vector<std::string> words;
        for (int j = 0; j < 20; ++j) words.push_back("w" + std::to_string(rng.below(400)));
        double got = set_sentiment(lex, words);
        EXPECT_NEAR(got, cbias::testing::oracle_mean_sentiment(ref, words), 1e-12);
        double lo = 1, hi = -1;
        for (const auto &w : words) {
            lo = std::min(lo, word_sentiment(lex, w));
            hi = std::max(hi, word_sentiment(lex, w));
        }
        EXPECT_LE(lo, got + 1e-15);
        EXPECT_GE(hi, got - 1e-15);
        rng.shuffle(words);
        EXPECT_NEAR(set_sentiment(lex, words), got, 1e-12);
    }
}
