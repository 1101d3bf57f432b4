#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sae {

enum class Segment : std::uint8_t { Question = 0, Context = 1 };

/// Half-open token range [begin, end) of one context sentence.
struct SentenceSpan {
  int begin = 0;
  int end = 0;
  int doc = 0;       // index of the owning document in the example
  int sentence = 0;  // sentence index inside that document
  int length() const { return end - begin; }
  bool operator==(const SentenceSpan&) const = default;
};

/// Byte range of a token inside its owning sentence text; {-1, -1} for
/// question and special tokens.
struct CharSpan {
  int begin = -1;
  int end = -1;
  bool operator==(const CharSpan&) const = default;
};

/// Contextual token embeddings H (L x d, row-major float) plus the layout
/// metadata needed to slice sentences and decode answers.
struct TokenMatrix {
  int length = 0;
  int dim = 0;
  std::vector<float> values;
  std::vector<std::string> tokens;
  std::vector<Segment> segments;
  std::vector<SentenceSpan> sentence_spans;
  std::vector<CharSpan> char_spans;
  int cls_index = 0;
  /// Trailing sentences removed to fit the length budget.
  int dropped_sentences = 0;

  std::span<const float> row(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<float> row(int i) {
    return {values.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }

  /// Throws CorruptionError when an invariant is broken: spans sorted,
  /// disjoint, non-empty and inside [0, L); CLS at 0; metadata sizes agree.
  void validate() const;

  bool operator==(const TokenMatrix&) const = default;
};

/// Index of the sentence span containing token `t`, or -1.
int sentence_of_token(const TokenMatrix& m, int t);

}  // namespace sae
