// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "entcal/harness.hpp"
#include "entcal/vocabulary.hpp"
#include "support.hpp"

namespace entcal {
namespace {

using testing::source_path;

TEST(Vocabulary, MinCountThreshold) {
  const auto v2 = build_vocabulary(std::vector<std::string>{"a a b"}, 2);
  EXPECT_TRUE(v2.contains("a"));
  EXPECT_FALSE(v2.contains("b"));
  EXPECT_EQ(v2.size(), kNumSpecials + 1);

  const auto v1 = build_vocabulary(std::vector<std::string>{"a a b"}, 1);
  EXPECT_TRUE(v1.contains("a"));
  EXPECT_TRUE(v1.contains("b"));
  EXPECT_EQ(v1.size(), kNumSpecials + 2);
}

TEST(Vocabulary, SpecialsAreDenseAndDistinct) {
  const Vocabulary v;
  EXPECT_EQ(v.size(), kNumSpecials);
  const auto& sp = v.specials();
  EXPECT_EQ(v.token(sp.pad), kPadSurface);
  EXPECT_EQ(v.token(sp.unk), kUnkSurface);
  EXPECT_EQ(v.token(sp.bos), kBosSurface);
  EXPECT_EQ(v.token(sp.eos), kEosSurface);
  EXPECT_TRUE(v.is_special(sp.eos));
}

TEST(Vocabulary, OrderingIsFrequencyThenLexicographic) {
  const auto v = build_vocabulary(std::vector<std::string>{"c b b a a", "d c"}, 1);
  ASSERT_EQ(v.size(), kNumSpecials + 4);
  EXPECT_EQ(v.tokens()[4], "a");
  EXPECT_EQ(v.tokens()[5], "b");
  EXPECT_EQ(v.tokens()[6], "c");
  EXPECT_EQ(v.tokens()[7], "d");
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(v.id_of(v.tokens()[i]), static_cast<TokenId>(i));
  }
}

TEST(Vocabulary, Errors) {
  EXPECT_ENTCAL_ERROR(build_vocabulary(std::vector<std::string>{}, 1), kCorpusEmpty);
  EXPECT_ENTCAL_ERROR(build_vocabulary(std::vector<std::string>{"", "  "}, 1), kCorpusEmpty);
  EXPECT_ENTCAL_ERROR(build_vocabulary(std::vector<std::string>{"a"}, 0), kInvalidParameter);
  const Vocabulary v;
  EXPECT_ENTCAL_ERROR(v.token(99), kInvalidId);
  EXPECT_ENTCAL_ERROR(decode_tokens(v, std::vector<TokenId>{2, 17}), kInvalidId);
}

TEST(Vocabulary, FixtureCorpusSizeMatchesIndependentCount) {
  // Expected sizes from a standalone Python frequency count over the same
  // lowercase whitespace tokenization.
  std::ifstream in(source_path("data/fixture_corpus.txt"));
  ASSERT_TRUE(in);
  const auto v = build_vocabulary(in, 2);
  EXPECT_EQ(v.size(), 2156u);
  const auto lines = read_lines(source_path("data/fixture_corpus.txt"));
  EXPECT_EQ(build_vocabulary(lines, 1).size(), 2162u);
  EXPECT_EQ(build_vocabulary(lines, 5).size(), 2141u);
  EXPECT_EQ(build_vocabulary(split_corpus(lines, 6).train, 2).size(), 2156u);
}

TEST(Encode, Examples) {
  const auto v = build_vocabulary(std::vector<std::string>{"a b"}, 1);
  const auto& sp = v.specials();
  EXPECT_EQ(encode_text(v, "A b").ids,
            (std::vector<TokenId>{sp.bos, v.id_of("a"), v.id_of("b")}));
  const auto va = build_vocabulary(std::vector<std::string>{"a"}, 1);
  EXPECT_EQ(encode_text(va, "a zzz").ids,
            (std::vector<TokenId>{sp.bos, va.id_of("a"), sp.unk}));
  EXPECT_EQ(encode_text(va, "").ids, (std::vector<TokenId>{sp.bos}));
  EXPECT_EQ(encode_text(va, "a").origin, Origin::kCorpusTarget);
}

TEST(Decode, Examples) {
  const auto v = build_vocabulary(std::vector<std::string>{"a b"}, 1);
  const auto& sp = v.specials();
  EXPECT_EQ(decode_tokens(v, std::vector<TokenId>{sp.bos, v.id_of("a"), v.id_of("b")}), "a b");
  EXPECT_EQ(decode_tokens(v, std::vector<TokenId>{sp.bos}), "");
  EXPECT_EQ(decode_tokens(v, std::vector<TokenId>{sp.bos, v.id_of("a"), sp.eos, sp.pad}), "a");
}

TEST(Encode, RoundTripOnFixtureLines) {
  const auto lines = read_lines(source_path("data/fixture_corpus.txt"));
  const auto v = build_vocabulary(lines, 5);
  std::mt19937_64 rng(7);
  for (int n = 0; n < 100; ++n) {
    const auto& line = lines[rng() % lines.size()];
    std::string expected;
    for (const auto& tok : tokenize(line)) {
      if (!expected.empty()) expected.push_back(' ');
      expected += v.contains(tok) ? tok : std::string(kUnkSurface);
    }
    EXPECT_EQ(decode_tokens(v, encode_text(v, line).ids), expected);
  }
}

TEST(Tokenize, LowercasesAndSplitsOnWhitespace) {
  EXPECT_EQ(tokenize("  The\tCAT\n sat "), (std::vector<std::string>{"the", "cat", "sat"}));
  EXPECT_TRUE(tokenize(" \t ").empty());
}

TEST(Vocabulary, HashDependsOnTokens) {
  const auto a = build_vocabulary(std::vector<std::string>{"a b"}, 1);
  const auto b = build_vocabulary(std::vector<std::string>{"a c"}, 1);
  EXPECT_EQ(a.hash(), build_vocabulary(std::vector<std::string>{"b a"}, 1).hash());
  EXPECT_NE(a.hash(), b.hash());
}

}  // namespace
}  // namespace entcal
