#include "sae/token_matrix.hpp"

#include <algorithm>
#include <string>

#include "sae/error.hpp"

namespace sae {

void TokenMatrix::validate() const {
  auto fail = [](const std::string& msg) { throw CorruptionError("token matrix: " + msg); };
  if (length < 1) fail("empty sequence");
  if (dim < 0) fail("negative dimension");
  if (values.size() != static_cast<std::size_t>(length) * static_cast<std::size_t>(dim))
    fail("payload has " + std::to_string(values.size()) + " floats, expected " +
         std::to_string(static_cast<std::size_t>(length) * dim));
  const auto L = static_cast<std::size_t>(length);
  if (tokens.size() != L || segments.size() != L || char_spans.size() != L)
    fail("per-token metadata does not match length " + std::to_string(length));
  if (cls_index != 0) fail("cls_index must be 0");
  int prev_end = 0;
  for (const auto& s : sentence_spans) {
    if (s.begin < prev_end) fail("sentence spans overlap or are unsorted");
    if (s.end <= s.begin) fail("empty sentence span");
    if (s.end > length) fail("sentence span past end of sequence");
    for (int t = s.begin; t < s.end; ++t)
      if (segments[t] != Segment::Context) fail("sentence span covers a non-context token");
    prev_end = s.end;
  }
}

int sentence_of_token(const TokenMatrix& m, int t) {
  auto it = std::upper_bound(m.sentence_spans.begin(), m.sentence_spans.end(), t,
                             [](int tok, const SentenceSpan& s) { return tok < s.begin; });
  if (it == m.sentence_spans.begin()) return -1;
  --it;
  if (t < it->end) return static_cast<int>(it - m.sentence_spans.begin());
  return -1;
}

}  // namespace sae
