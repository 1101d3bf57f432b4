#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sae {

/// A token with its byte offsets [begin, end) in the source text.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Deterministic word/punctuation tokenizer. Whitespace separates words,
/// ASCII punctuation becomes single-character tokens, and an apostrophe
/// followed by letters ("'s") is kept as one clitic token.
std::vector<Token> tokenize(std::string_view text);

/// Lowercase and drop ASCII punctuation. May return an empty string.
std::string normalize_token(std::string_view token);

/// Lowercase, strip punctuation, collapse whitespace.
std::string normalize_mention(std::string_view text);

/// Answer normalization used by the evaluation metrics: lowercase, remove
/// punctuation, remove the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);

/// Whitespace split of an already-normalized string.
std::vector<std::string> split_words(std::string_view text);

/// Shared stopword list (lowercase). Used by the annotator chunker and the
/// toy embedder's exact-match feature.
bool is_stopword(std::string_view lowercase_word);

bool is_punct(char c);

}  // namespace sae
