#include "sae/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace sae {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

constexpr std::array kStopwords = {
    "'s",    "a",     "about", "after", "also",  "an",    "and",   "are",  "as",    "at",
    "be",    "been",  "before", "being", "both", "but",   "by",    "did",  "do",    "does",
    "for",   "from",  "had",   "has",   "have",  "he",    "her",   "his",  "how",   "in",
    "into",  "is",    "it",    "its",   "no",    "not",   "of",    "on",   "or",    "over",
    "same",  "she",   "than",  "that",  "the",   "their", "then",  "there", "these", "they",
    "this",  "those", "to",    "under", "was",   "were",  "what",  "when", "where", "which",
    "who",   "whom",  "whose", "why",   "with",  "yes",
};

}  // namespace

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (text[i] == '\'' && i + 1 < n && is_alpha(text[i + 1])) {
      std::size_t j = i + 1;
      while (j < n && is_alpha(text[j])) ++j;
      out.push_back({std::string(text.substr(i, j - i)), i, j});
      i = j;
      continue;
    }
    if (is_punct(text[i])) {
      out.push_back({std::string(1, text[i]), i, i + 1});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !is_space(text[j]) && !is_punct(text[j])) ++j;
    out.push_back({std::string(text.substr(i, j - i)), i, j});
    i = j;
  }
  return out;
}

std::string normalize_token(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  for (char c : token) {
    if (is_punct(c)) continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string normalize_mention(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_punct(c)) continue;
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string normalize_answer(std::string_view text) {
  std::string stripped;
  stripped.reserve(text.size());
  for (char c : text) {
    if (is_punct(c)) continue;
    stripped.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  std::string out;
  for (const auto& w : split_words(stripped)) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

bool is_stopword(std::string_view w) {
  return std::find(kStopwords.begin(), kStopwords.end(), w) != kStopwords.end();
}

}  // namespace sae
