#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sae/annotator.hpp"
#include "sae/data_model.hpp"
#include "sae/token_matrix.hpp"

namespace sae {

inline constexpr int kNumEdgeTypes = 3;

/// 1: same document. 2: different documents, both mention something from
/// the question. 3: different documents sharing a mention.
enum class EdgeType { SameDocument = 1, QuestionMention = 2, SharedMention = 3 };

/// Which edge types are built.
struct EdgeMask {
  std::array<bool, kNumEdgeTypes> enabled{true, true, true};
  bool has(int type) const { return enabled[static_cast<std::size_t>(type - 1)]; }
  /// "1,2,3", "1,3", ""; throws Error on anything else.
  static EdgeMask parse(std::string_view spec);
  std::string to_string() const;
  bool operator==(const EdgeMask&) const = default;
};

struct GraphNode {
  int doc = 0;
  std::string title;
  int sentence = 0;
  /// Index into the token matrix's sentence_spans; -1 if unattached.
  int span = -1;
};

struct SentenceInput {
  int doc = 0;
  MentionSet mentions;
};

struct SentenceGraph {
  std::vector<GraphNode> nodes;
  /// neighbors[r - 1][j]: sorted neighbor list of node j under edge type r.
  std::array<std::vector<std::vector<int>>, kNumEdgeTypes> neighbors;

  int size() const { return static_cast<int>(nodes.size()); }
  const std::vector<int>& of(int type, int node) const {
    return neighbors[static_cast<std::size_t>(type - 1)][static_cast<std::size_t>(node)];
  }
  bool has_edge(int type, int a, int b) const;
  /// Undirected edges (a < b) of one type, sorted.
  std::vector<std::pair<int, int>> edges(int type) const;
};

/// Typed sentence graph. A pair may carry several edge types at once; nodes
/// without edges are kept.
SentenceGraph build_graph(std::span<const SentenceInput> sentences, const MentionSet& question,
                          const EdgeMask& mask = {});

/// Graph over the sentences laid out in `tokens`, annotated with `annotator`.
SentenceGraph build_example_graph(const Example& ex, const TokenMatrix& tokens, const Annotator& annotator,
                                  const EdgeMask& mask = {});

}  // namespace sae
