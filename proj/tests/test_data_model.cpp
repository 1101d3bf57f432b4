#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sae/data_model.hpp"
#include "sae/embedder.hpp"
#include "sae/error.hpp"

namespace sae {
namespace {

using testing::kiss_and_tell;

TEST(DeriveLabels, GoldFlagsAndScores) {
  const auto ex = derive_gold_labels(kiss_and_tell());
  EXPECT_TRUE(ex.labels_derived);
  EXPECT_FALSE(ex.documents[0].gold);
  EXPECT_EQ(ex.documents[0].score, 0);
  EXPECT_TRUE(ex.documents[1].gold);
  EXPECT_EQ(ex.documents[1].score, 1);
  EXPECT_TRUE(ex.documents[2].gold);
  EXPECT_EQ(ex.documents[2].score, 2);
  EXPECT_EQ(ex.gold_documents(), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(ex.answer_type(), AnswerType::Span);
}

TEST(DeriveLabels, Idempotent) {
  const auto once = derive_gold_labels(kiss_and_tell());
  EXPECT_EQ(derive_gold_labels(once), once);
}

TEST(DeriveLabels, YesNoHasNoAnswerDocument) {
  const auto ex = derive_gold_labels(testing::yes_no_example());
  EXPECT_EQ(ex.answer_type(), AnswerType::Yes);
  for (const auto& d : ex.documents) EXPECT_LT(d.score, 2);
  EXPECT_EQ(ex.gold_documents(), (std::vector<std::size_t>{0, 2}));
}

TEST(AnswerOccurrences, NormalizedTokenMatch) {
  const auto occ = find_answer_occurrences("also served as CHIEF of Protocol, of the US", "Chief of Protocol");
  ASSERT_EQ(occ.size(), 1u);
  EXPECT_EQ(occ[0].first, 15u);
  EXPECT_EQ(occ[0].second, 32u);
  EXPECT_TRUE(find_answer_occurrences("Chief Protocol", "Chief of Protocol").empty());
  EXPECT_EQ(find_answer_occurrences("a b a b", "a b").size(), 2u);
}

TEST(LocateAnswer, FindsSpanInGoldContext) {
  const auto ex = derive_gold_labels(kiss_and_tell());
  const auto docs = ex.gold_documents();
  const auto layout = build_layout(ex, docs);
  const auto label = locate_answer_span(ex, layout);
  ASSERT_FALSE(label.span_masked());
  EXPECT_EQ(decode_span_text(ex, layout, *label.start, *label.end), "Chief of Protocol");
  EXPECT_EQ(label.source_doc, 2);
}

TEST(LocateAnswer, SupportingSentenceBeatsEarlierOccurrence) {
  Example ex;
  ex.id = "tie";
  ex.question = "Who?";
  ex.answer = "Zed";
  ex.documents = {{"A", {"Zed is here.", "Nothing."}}, {"B", {"Filler.", "The answer is Zed."}}};
  ex.supporting_facts = {{"A", 1}, {"B", 1}};
  ex = derive_gold_labels(ex);
  const std::vector<std::size_t> docs{0, 1};
  const auto layout = build_layout(ex, docs);
  const auto label = locate_answer_span(ex, layout);
  ASSERT_FALSE(label.span_masked());
  const int s = sentence_of_token(layout, *label.start);
  EXPECT_EQ(layout.sentence_spans[s].doc, 1);
  EXPECT_EQ(layout.sentence_spans[s].sentence, 1);
}

TEST(LocateAnswer, MissingAnswerIsMasked) {
  auto ex = kiss_and_tell();
  ex.answer = "Secretary of State";
  ex = derive_gold_labels(ex);
  EXPECT_TRUE(ex.answer_unlocated);
  const auto docs = ex.gold_documents();
  EXPECT_TRUE(locate_answer_span(ex, build_layout(ex, docs)).span_masked());
}

TEST(LocateAnswer, YesNoMasksSpan) {
  const auto ex = derive_gold_labels(testing::yes_no_example());
  const auto docs = ex.gold_documents();
  const auto label = locate_answer_span(ex, build_layout(ex, docs));
  EXPECT_EQ(label.type, AnswerType::Yes);
  EXPECT_TRUE(label.span_masked());
}

TEST(Dataset, RoundTripKeepsDerivedLabels) {
  const std::vector<Example> data{derive_gold_labels(kiss_and_tell()), derive_gold_labels(testing::yes_no_example())};
  EXPECT_EQ(parse_dataset(serialize_dataset(data)), data);
}

TEST(Dataset, ParsesHotpotShapeAndSortsFacts) {
  const auto data = parse_dataset(R"([{"_id": "x", "question": "q?", "answer": "no", "type": "comparison",
      "level": "easy", "supporting_facts": [["B", 0], ["A", 0], ["A", 0]],
      "context": [["A", ["a."]], ["B", ["b."]]]}])");
  ASSERT_EQ(data.size(), 1u);
  EXPECT_EQ(data[0].supporting_facts, (std::vector<SupportingFact>{{"A", 0}, {"B", 0}}));
  EXPECT_EQ(data[0].reasoning_type, ReasoningType::Comparison);
  EXPECT_EQ(data[0].difficulty, "easy");
  EXPECT_FALSE(data[0].labels_derived);
}

TEST(Dataset, MalformedJsonReportsOffset) {
  try {
    parse_dataset("[{\"_id\": }]");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.byte_offset(), 0u);
  }
}

TEST(Dataset, InvalidFactNamesExample) {
  try {
    parse_dataset(R"([{"_id": "bad", "question": "q", "answer": "a", "supporting_facts": [["Missing", 0]],
        "context": [["A", ["a."]]]}])");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.example_id(), "bad");
  }
}

TEST(Validate, RejectsOutOfRangeAndUnsortedFacts) {
  auto ex = kiss_and_tell();
  ex.supporting_facts = {{"Shirley Temple", 5}};
  EXPECT_THROW(validate_example(ex), ValidationError);
  ex.supporting_facts = {{"Shirley Temple", 1}, {"Shirley Temple", 0}};
  EXPECT_THROW(validate_example(ex), ValidationError);
  ex.documents.clear();
  EXPECT_THROW(validate_example(ex), ValidationError);
}

}  // namespace
}  // namespace sae
