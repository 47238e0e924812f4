#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "bizlens/config_file.hpp"
#include "bizlens/text.hpp"
#include "bizlens/util.hpp"

using namespace bizlens;

TEST(Util, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Util, CanonicalJsonKeepsInsertionOrderAndNoWhitespace) {
  Json j;
  j["z"] = 1;
  j["a"] = Json::array({1.5, "x", nullptr, true});
  EXPECT_EQ(canonical_json(j), R"({"z":1,"a":[1.5,"x",null,true]})");
}

TEST(Util, CanonicalJsonDoublesRoundTrip) {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    double v = (rng.unit() - 0.5) * std::pow(10.0, static_cast<double>(rng.between(-8, 12)));
    std::string s = canonical_json(Json(v));
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(canonical_json(Json(0.1)), "0.1");
}

TEST(Util, IsoDates) {
  auto d = parse_iso_date("2024-02-29");
  ASSERT_TRUE(d);
  EXPECT_EQ(format_iso_date(*d), "2024-02-29");
  EXPECT_FALSE(parse_iso_date("2023-02-29"));
  EXPECT_FALSE(parse_iso_date("2024-2-01"));
  EXPECT_FALSE(parse_iso_date("2024-01-01x"));
  EXPECT_EQ(days_between(make_date(2024, 1, 1), make_date(2025, 1, 1)), 366);
  EXPECT_EQ(days_between(make_date(2025, 1, 1), make_date(2024, 1, 1)), -366);
}

TEST(Util, RngIsDeterministicAndInRange) {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    auto x = a.below(7);
    EXPECT_EQ(x, b.below(7));
    EXPECT_LT(x, 7u);
    auto y = a.between(-3, 3);
    EXPECT_EQ(y, b.between(-3, 3));
    EXPECT_GE(y, -3);
    EXPECT_LE(y, 3);
    double u = a.unit();
    EXPECT_EQ(u, b.unit());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Text, TokenizeDropsShortTokens) {
  EXPECT_EQ(text::tokenize("A U.S. rate-cut, 2024!"), (std::vector<std::string>{"rate", "cut", "2024"}));
  EXPECT_EQ(text::words("A b"), (std::vector<std::string>{"a", "b"}));
}

TEST(Text, EditDistanceAgainstDefinition) {
  EXPECT_EQ(text::edit_distance("kitten", "sitting"), 3u);
  EXPECT_EQ(text::edit_distance("", "abc"), 3u);
  EXPECT_EQ(text::edit_distance("abc", "abc"), 0u);
}

TEST(Text, FormatGrouped) {
  EXPECT_EQ(text::format_grouped(648125.04, 1), "648,125.0");
  EXPECT_EQ(text::format_grouped(-1234567, 0), "-1,234,567");
  EXPECT_EQ(text::format_grouped(999.96, 1), "1,000.0");
}

TEST(Text, CountWords) {
  EXPECT_EQ(text::count_word("three"), 3);
  EXPECT_EQ(text::count_word("12"), 12);
  EXPECT_FALSE(text::count_word("dozen"));
}

TEST(ConfigFile, ParsesSectionsKeysAndContinuations) {
  auto cfg = ConfigFile::parse("# c\n[a]\nk = v1\nk = v2\nbare words\n[b]\nlong = one\n  | two\n", "t.conf");
  const auto& a = cfg.require("a");
  EXPECT_EQ(a.get_all("k"), (std::vector<std::string>{"v1", "v2"}));
  EXPECT_EQ(a.bare(), (std::vector<std::string>{"bare words"}));
  EXPECT_EQ(cfg.require("b").require("long"), "one two");
  EXPECT_THROW(cfg.require("missing"), ConfigError);
  EXPECT_THROW(a.require("nope"), ConfigError);
}
