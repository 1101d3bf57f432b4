#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sae/token_matrix.hpp"

namespace sae {

enum class ReasoningType { Bridge, Comparison };

/// Class index order used by the answer-type head.
enum class AnswerType { Span = 0, Yes = 1, No = 2 };
inline constexpr int kNumAnswerTypes = 3;

std::string_view to_string(ReasoningType t);
std::string_view to_string(AnswerType t);

struct SupportingFact {
  std::string title;
  int sentence = 0;
  auto operator<=>(const SupportingFact&) const = default;
};

struct Document {
  std::string title;
  std::vector<std::string> sentences;
  bool gold = false;
  /// Pairwise-ranking score S(D): 0 non-gold, 1 gold, 2 gold containing the answer.
  int score = 0;
  bool operator==(const Document&) const = default;
};

struct Example {
  std::string id;
  std::string question;
  std::vector<Document> documents;
  /// Sorted, duplicate-free.
  std::vector<SupportingFact> supporting_facts;
  std::string answer;
  ReasoningType reasoning_type = ReasoningType::Bridge;
  std::optional<std::string> difficulty;
  bool labels_derived = false;
  /// Span answer not found in any gold document during label derivation.
  bool answer_unlocated = false;

  AnswerType answer_type() const;
  bool is_support(const std::string& title, int sentence) const;
  std::vector<std::size_t> gold_documents() const;
  bool operator==(const Example&) const = default;
};

struct AnswerLabel {
  AnswerType type = AnswerType::Span;
  std::optional<int> start;
  std::optional<int> end;
  std::optional<int> source_doc;
  /// Span answer with no exact occurrence: the span loss is masked.
  bool span_masked() const { return !start.has_value(); }
};

/// Parse the public HotpotQA JSON shape (a list of objects with _id,
/// question, answer, supporting_facts, context, type, level). A "derived"
/// object, when present, restores previously derived labels.
/// Throws ParseError (with byte offset) or ValidationError (with example id).
std::vector<Example> parse_dataset(std::string_view json);
std::vector<Example> load_dataset(const std::string& path);

/// Inverse of parse_dataset. Derived labels are written under "derived".
std::string serialize_dataset(const std::vector<Example>& examples);
void save_dataset(const std::string& path, const std::vector<Example>& examples);

/// Throws ValidationError when an invariant of the example is broken.
void validate_example(const Example& ex);

/// Gold flags and S(D) scores from the supporting facts and the answer.
/// Recomputed from scratch, so repeated application is a no-op.
Example derive_gold_labels(Example ex);

/// Byte ranges of every exact occurrence of `answer` in `sentence`, matched
/// over normalized tokens (lowercase, punctuation dropped).
std::vector<std::pair<std::size_t, std::size_t>> find_answer_occurrences(
    std::string_view sentence, std::string_view answer);

/// Token-level answer span inside the context of `tokens`. Occurrences in a
/// supporting-fact sentence win over earlier occurrences elsewhere.
AnswerLabel locate_answer_span(const Example& ex, const TokenMatrix& tokens);

/// Text covered by tokens [start, end] of the context, cut from the
/// original sentence strings through the per-token byte offsets.
std::string decode_span_text(const Example& ex, const TokenMatrix& tokens, int start, int end);

}  // namespace sae
