#include <set>

#include <gtest/gtest.h>

#include "cbias/errors.h"
#include "cbias/util.h"
#include "test_helpers.h"

using namespace cbias;

TEST(Rng, SameSeedSameSequence) {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        auto x = a.next();
        EXPECT_EQ(x, b.next());
        differs |= x != c.next();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, SplitmixReferenceValues) {
    // First outputs of the reference SplitMix64 generator seeded with 0.
    Rng r(0);
    EXPECT_EQ(r.next(), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(r.next(), 0x6e789e6aa1b965f4ULL);
    EXPECT_EQ(r.next(), 0x06c45d188009454fULL);
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
    Rng r(7);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        auto x = r.below(10);
        ASSERT_LT(x, 10u);
        seen.insert(x);
    }
    EXPECT_EQ(seen.size(), 10u);
}

TEST(Rng, UniformInUnitInterval) {
    Rng r(9);
    double sum = 0;
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 10000, 0.5, 0.02);
}

TEST(Rng, DerivedSeedsDiffer) {
    EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
    EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
    EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

TEST(Fnv1a, KnownVectors) {
    Fnv1a empty;
    EXPECT_EQ(empty.digest(), 0xcbf29ce484222325ULL);
    Fnv1a a;
    a.update("a");
    EXPECT_EQ(a.digest(), 0xaf63dc4c8601ec8cULL);
    Fnv1a foobar;
    foobar.update("foobar");
    EXPECT_EQ(foobar.hex(), "85944171f73967e8");
}

TEST(Csv, QuotesOnlyWhenNeeded) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Csv, SplitRoundTrip) {
    std::vector<std::string> fields = {"Power, organizing", "x", "quote \"q\"", ""};
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ",";
        line += csv_field(fields[i]);
    }
    EXPECT_EQ(csv_split(line), fields);
}

TEST(Strings, SplitTrimLower) {
    EXPECT_EQ(split("a,b,,c", ','), (std::vector<std::string>{"a", "b", "", "c"}));
    EXPECT_EQ(trim("  x y \t"), "x y");
    EXPECT_EQ(to_lower("MiXeD"), "mixed");
}

TEST(Files, ReadWriteAndMissing) {
    cbias::testing::TempDir dir;
    write_file(dir / "f.txt", "hello\n");
    EXPECT_EQ(read_file(dir / "f.txt"), "hello\n");
    EXPECT_THROW(read_file(dir / "missing.txt"), IoError);
}
