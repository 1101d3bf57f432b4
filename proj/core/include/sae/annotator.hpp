#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sae {

struct Example;

struct Mention {
  /// Normalized form (lowercase, no punctuation, single spaces).
  std::string key;
  /// Byte range in the source text; absent for injected annotations.
  std::optional<std::pair<std::size_t, std::size_t>> span;
};

/// Named entities and noun phrases found in one text.
class MentionSet {
 public:
  MentionSet() = default;
  explicit MentionSet(std::vector<Mention> mentions);

  /// Sorted, unique normalized strings.
  const std::vector<std::string>& keys() const { return keys_; }
  const std::vector<Mention>& mentions() const { return mentions_; }
  bool empty() const { return keys_.empty(); }
  bool contains(std::string_view key) const;

 private:
  std::vector<Mention> mentions_;
  std::vector<std::string> keys_;
};

/// Heuristic chunker. Named entities are maximal runs of capitalized tokens
/// that may bridge the lowercase connectors of/and/the; noun phrases are
/// stopword- and punctuation-delimited runs of words. Pure and deterministic.
MentionSet annotate(std::string_view text);

/// True iff the two normalized key sets intersect.
bool mentions_match(const MentionSet& a, const MentionSet& b);

/// Precomputed mentions keyed by example id. File schema:
///   { "<example id>": { "question": ["m", ...],
///                       "context": [["<title>", [["m", ...], ...]], ...] } }
/// The per-title list holds one mention list per sentence.
class AnnotationOverrides {
 public:
  static AnnotationOverrides load(const std::string& path);
  static AnnotationOverrides parse(std::string_view json);

  std::optional<MentionSet> question(const std::string& example_id) const;
  std::optional<MentionSet> sentence(const std::string& example_id, const std::string& title,
                                     int sentence) const;
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::optional<std::vector<std::string>> question;
    std::map<std::string, std::vector<std::vector<std::string>>> context;
  };
  std::map<std::string, Entry> entries_;
};

/// Heuristic annotation with optional file overrides.
class Annotator {
 public:
  Annotator() = default;
  explicit Annotator(AnnotationOverrides overrides) : overrides_(std::move(overrides)) {}

  MentionSet question(const Example& ex) const;
  MentionSet sentence(const Example& ex, std::size_t doc, std::size_t sentence) const;

 private:
  std::optional<AnnotationOverrides> overrides_;
};

}  // namespace sae
