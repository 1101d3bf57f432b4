#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sae/annotator.hpp"
#include "sae/error.hpp"
#include "sae/text.hpp"

namespace sae {
namespace {

std::vector<std::string> texts(const std::vector<Token>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(t.text);
  return out;
}

TEST(Tokenize, SplitsPunctuationAndKeepsClitics) {
  const auto toks = tokenize("Temple's film, Kiss and Tell.");
  EXPECT_EQ(texts(toks), (std::vector<std::string>{"Temple", "'s", "film", ",", "Kiss", "and", "Tell", "."}));
  EXPECT_EQ(toks[1].begin, 6u);
  EXPECT_EQ(toks[1].end, 8u);
}

TEST(Tokenize, OffsetsCoverSourceText) {
  const std::string s = "  Shirley  Temple (1928)";
  for (const auto& t : tokenize(s)) EXPECT_EQ(s.substr(t.begin, t.end - t.begin), t.text);
}

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Normalize, AnswerDropsArticlesAndPunctuation) {
  EXPECT_EQ(normalize_answer("The  Chief of Protocol!"), "chief of protocol");
  EXPECT_EQ(normalize_answer("an apple, a pear"), "apple pear");
  EXPECT_EQ(normalize_mention("  Kiss and  Tell. "), "kiss and tell");
  EXPECT_EQ(normalize_token("U.S."), "us");
}

bool has(const MentionSet& m, const std::string& key) { return m.contains(key); }

TEST(Annotate, NamedEntityRun) {
  const auto m = annotate("Shirley Temple Black was an American actress");
  EXPECT_TRUE(has(m, "shirley temple black"));
}

TEST(Annotate, EmptySentence) { EXPECT_TRUE(annotate("").empty()); }

TEST(Annotate, EntityBridgesConnectors) {
  const auto m = annotate("the film Kiss and Tell");
  EXPECT_TRUE(has(m, "kiss and tell"));
  EXPECT_FALSE(has(m, "kiss"));
}

TEST(Annotate, NounPhrasesAreLowercasedChunks) {
  const auto m = annotate("She served as the chief diplomat.");
  EXPECT_TRUE(has(m, "chief diplomat"));
}

TEST(Annotate, KeysSortedUnique) {
  const auto m = annotate("Ghana and Ghana visited Ghana");
  EXPECT_TRUE(std::is_sorted(m.keys().begin(), m.keys().end()));
  EXPECT_EQ(std::adjacent_find(m.keys().begin(), m.keys().end()), m.keys().end());
}

TEST(Annotate, Deterministic) {
  const std::string s = "Kiss and Tell is a 1945 American comedy film starring Shirley Temple as Corliss Archer.";
  EXPECT_EQ(annotate(s).keys(), annotate(s).keys());
}

TEST(MentionsMatch, ExactNormalizedEquality) {
  EXPECT_TRUE(mentions_match(annotate("Shirley Temple was born"), annotate("with SHIRLEY TEMPLE.")));
  EXPECT_FALSE(mentions_match(annotate("Shirley Temple"), annotate("Temple Black")));
}

TEST(AnnotationOverrides, ReplaceHeuristicMentions) {
  const auto ex = testing::kiss_and_tell();
  const auto overrides = AnnotationOverrides::parse(R"({")" + ex.id + R"(": {
      "question": ["corliss archer"],
      "context": [["Shirley Temple", [["Shirley Temple"], []]]]}})");
  const Annotator ann(overrides);
  EXPECT_EQ(ann.question(ex).keys(), std::vector<std::string>{"corliss archer"});
  EXPECT_EQ(ann.sentence(ex, 2, 0).keys(), std::vector<std::string>{"shirley temple"});
  EXPECT_TRUE(ann.sentence(ex, 2, 1).empty());
  // Sentences without an override fall back to the heuristic.
  EXPECT_EQ(ann.sentence(ex, 1, 0).keys(), annotate(ex.documents[1].sentences[0]).keys());
}

TEST(AnnotationOverrides, MalformedJsonThrows) {
  EXPECT_THROW(AnnotationOverrides::parse("{\"x\": 3"), ParseError);
}

TEST(Rng, SubstreamsAreIndependentAndReproducible) {
  auto a = Rng::substream(42, "init");
  auto b = Rng::substream(42, "init");
  auto c = Rng::substream(42, "shuffle");
  const auto x = a.next();
  EXPECT_EQ(x, b.next());
  EXPECT_NE(x, c.next());
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.below(5), 5u);
  }
}

}  // namespace
}  // namespace sae
