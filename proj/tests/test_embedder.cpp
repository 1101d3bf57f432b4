#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "sae/embedder.hpp"
#include "sae/error.hpp"
#include "sae/interchange.hpp"

namespace sae {
namespace {

Example counting_example() {
  Example ex;
  ex.id = "count";
  ex.question = "Who is it?";
  ex.answer = "five";
  ex.documents = {{"A", {"One two three four five", "Six seven eight nine"}},
                  {"B", {"Ten eleven twelve thirteen fourteen fifteen"}}};
  ex.supporting_facts = {{"A", 0}, {"B", 0}};
  return derive_gold_labels(ex);
}

TEST(Layout, LengthIsClsQuestionSepContextSep) {
  const auto ex = counting_example();
  const std::vector<std::size_t> docs{0, 1};
  const auto m = build_layout(ex, docs);
  EXPECT_EQ(m.length, 1 + 4 + 1 + 15 + 1);
  ASSERT_EQ(m.sentence_spans.size(), 3u);
  EXPECT_EQ(m.sentence_spans[0], (SentenceSpan{6, 11, 0, 0}));
  EXPECT_EQ(m.sentence_spans[1], (SentenceSpan{11, 15, 0, 1}));
  EXPECT_EQ(m.sentence_spans[2], (SentenceSpan{15, 21, 1, 0}));
  EXPECT_EQ(m.cls_index, 0);
  EXPECT_EQ(m.segments[3], Segment::Question);
  EXPECT_EQ(m.segments[7], Segment::Context);
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(sentence_of_token(m, 12), 1);
  EXPECT_EQ(sentence_of_token(m, 2), -1);
}

TEST(Layout, TruncationDropsWholeTrailingSentences) {
  const auto ex = counting_example();
  const std::vector<std::size_t> docs{0, 1};
  auto m = build_layout(ex, docs, 1 + 4 + 1 + 5 + 4 + 1);
  EXPECT_EQ(m.sentence_spans.size(), 2u);
  EXPECT_EQ(m.dropped_sentences, 1);
  m = build_layout(ex, docs, 1 + 4 + 1 + 5 + 4);
  EXPECT_EQ(m.sentence_spans.size(), 1u);
  EXPECT_EQ(m.dropped_sentences, 2);
  for (const auto& s : m.sentence_spans) EXPECT_EQ(s.length(), 5);
}

TEST(ToyEmbedder, DeterministicAndSeeded) {
  const auto ex = testing::kiss_and_tell();
  const ToyEmbedder a({.dim = 16, .seed = 3}), b({.dim = 16, .seed = 3}), c({.dim = 16, .seed = 4});
  const auto ma = a.selector_input(ex, 1);
  EXPECT_EQ(ma, b.selector_input(ex, 1));
  EXPECT_NE(ma.values, c.selector_input(ex, 1).values);
  EXPECT_EQ(ma.dim, 16);
  EXPECT_EQ(ma.values.size(), static_cast<std::size_t>(ma.length) * 16);
  EXPECT_NO_THROW(ma.validate());
  for (const auto& s : ma.sentence_spans) EXPECT_EQ(s.doc, 1);
  for (float v : ma.values) ASSERT_TRUE(std::isfinite(v));
}

TEST(ToyEmbedder, SummariesAreClsRows) {
  const auto ex = testing::kiss_and_tell();
  const ToyEmbedder emb({.dim = 8});
  const auto s = document_summaries(emb, ex);
  ASSERT_EQ(s.size(), ex.documents.size() * 8);
  for (std::size_t d = 0; d < ex.documents.size(); ++d) {
    const auto m = emb.selector_input(ex, d);
    for (int k = 0; k < 8; ++k) EXPECT_EQ(s[d * 8 + k], m.row(m.cls_index)[k]);
  }
}

TEST(ToyEmbedder, ReasonerInputFollowsGivenDocuments) {
  const auto ex = testing::kiss_and_tell();
  const ToyEmbedder emb({.dim = 8});
  const std::vector<std::size_t> docs{1, 2};
  const auto m = emb.reasoner_input(ex, docs);
  ASSERT_EQ(m.sentence_spans.size(), 4u);
  EXPECT_EQ(m.sentence_spans.front().doc, 1);
  EXPECT_EQ(m.sentence_spans.back().doc, 2);
}

InterchangeFile sample_file() {
  const auto ex = testing::kiss_and_tell();
  const ToyEmbedder emb({.dim = 6});
  InterchangeFile f;
  f.meta_json = R"({"model":"toy"})";
  for (std::size_t d = 0; d < ex.documents.size(); ++d) f.entries.push_back({ex.id, selector_slot(d), emb.selector_input(ex, d)});
  const std::vector<std::size_t> docs{1, 2};
  f.entries.push_back({ex.id, reasoner_slot(docs), emb.reasoner_input(ex, docs)});
  return f;
}

TEST(Interchange, SlotNames) {
  EXPECT_EQ(selector_slot(3), "selector:3");
  const std::vector<std::size_t> docs{1, 4};
  EXPECT_EQ(reasoner_slot(docs), "reasoner:1+4");
}

TEST(Interchange, RoundTripIsBitExact) {
  const auto f = sample_file();
  std::stringstream buf;
  write_interchange(buf, f);
  const auto g = read_interchange(buf);
  EXPECT_EQ(g.entries, f.entries);
  EXPECT_EQ(g.meta_json, f.meta_json);
}

TEST(Interchange, HeaderStartsWithMagicAndVersion) {
  std::stringstream buf;
  write_interchange(buf, sample_file());
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 4), "SAEE");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
  EXPECT_EQ(bytes[5], 0);
}

TEST(Interchange, BadMagicAndVersion) {
  std::stringstream buf;
  write_interchange(buf, sample_file());
  std::string bytes = buf.str();
  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream s1(bad);
  EXPECT_THROW(read_interchange(s1), FormatError);
  bad = bytes;
  bad[4] = 9;
  std::stringstream s2(bad);
  EXPECT_THROW(read_interchange(s2), FormatError);
}

TEST(Interchange, TruncatedOrTrailingPayload) {
  std::stringstream buf;
  write_interchange(buf, sample_file());
  const std::string bytes = buf.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_interchange(cut), CorruptionError);
  std::stringstream extra(bytes + "abcd");
  EXPECT_THROW(read_interchange(extra), CorruptionError);
}

TEST(InterchangeStore, ServesSlotsAndReportsMissing) {
  const auto ex = testing::kiss_and_tell();
  const InterchangeStore store(sample_file());
  EXPECT_EQ(store.dim(), 6);
  EXPECT_EQ(store.size(), 4u);
  const ToyEmbedder emb({.dim = 6});
  EXPECT_EQ(store.selector_input(ex, 2), emb.selector_input(ex, 2));
  const std::vector<std::size_t> gold{1, 2}, other{0, 1};
  EXPECT_EQ(store.reasoner_input(ex, gold), emb.reasoner_input(ex, gold));
  EXPECT_THROW(store.reasoner_input(ex, other), MissingSlotError);
  auto missing = ex;
  missing.id = "nope";
  EXPECT_THROW(store.selector_input(missing, 0), MissingSlotError);
}

}  // namespace
}  // namespace sae
