#include "sae/graph.hpp"

#include <algorithm>
#include <map>

#include "sae/error.hpp"

namespace sae {

EdgeMask EdgeMask::parse(std::string_view spec) {
  EdgeMask m;
  m.enabled = {false, false, false};
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto comma = std::min(spec.find(',', pos), spec.size());
    const std::string part(spec.substr(pos, comma - pos));
    pos = comma + 1;
    if (part.empty()) continue;
    if (part != "1" && part != "2" && part != "3") throw Error("unknown edge type '" + part + "' (expected 1, 2 or 3)");
    m.enabled[static_cast<std::size_t>(part[0] - '1')] = true;
  }
  return m;
}

std::string EdgeMask::to_string() const {
  std::string out;
  for (int r = 1; r <= kNumEdgeTypes; ++r) {
    if (!has(r)) continue;
    if (!out.empty()) out += ',';
    out += static_cast<char>('0' + r);
  }
  return out;
}

bool SentenceGraph::has_edge(int type, int a, int b) const {
  const auto& n = of(type, a);
  return std::binary_search(n.begin(), n.end(), b);
}

std::vector<std::pair<int, int>> SentenceGraph::edges(int type) const {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < size(); ++a)
    for (int b : of(type, a))
      if (a < b) out.emplace_back(a, b);
  return out;
}

SentenceGraph build_graph(std::span<const SentenceInput> sentences, const MentionSet& question, const EdgeMask& mask) {
  const int n = static_cast<int>(sentences.size());
  SentenceGraph g;
  g.nodes.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.nodes[static_cast<std::size_t>(i)].doc = sentences[static_cast<std::size_t>(i)].doc;

  std::array<std::vector<std::vector<char>>, kNumEdgeTypes> adj;
  for (auto& a : adj) a.assign(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  auto link = [&](int type, int a, int b) {
    if (a == b) return;
    adj[static_cast<std::size_t>(type - 1)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = 1;
    adj[static_cast<std::size_t>(type - 1)][static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = 1;
  };
  auto doc = [&](int i) { return sentences[static_cast<std::size_t>(i)].doc; };

  if (mask.has(1)) {
    std::map<int, std::vector<int>> by_doc;
    for (int i = 0; i < n; ++i) by_doc[doc(i)].push_back(i);
    for (const auto& [d, members] : by_doc)
      for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b) link(1, members[a], members[b]);
  }
  if (mask.has(2)) {
    std::vector<int> hits;
    for (int i = 0; i < n; ++i)
      if (mentions_match(sentences[static_cast<std::size_t>(i)].mentions, question)) hits.push_back(i);
    for (std::size_t a = 0; a < hits.size(); ++a)
      for (std::size_t b = a + 1; b < hits.size(); ++b)
        if (doc(hits[a]) != doc(hits[b])) link(2, hits[a], hits[b]);
  }
  if (mask.has(3)) {
    std::map<std::string, std::vector<int>> index;
    for (int i = 0; i < n; ++i)
      for (const auto& key : sentences[static_cast<std::size_t>(i)].mentions.keys()) index[key].push_back(i);
    for (const auto& [key, members] : index)
      for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b)
          if (doc(members[a]) != doc(members[b])) link(3, members[a], members[b]);
  }

  for (int r = 0; r < kNumEdgeTypes; ++r) {
    auto& lists = g.neighbors[static_cast<std::size_t>(r)];
    lists.resize(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (adj[static_cast<std::size_t>(r)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)])
          lists[static_cast<std::size_t>(a)].push_back(b);
  }
  return g;
}

SentenceGraph build_example_graph(const Example& ex, const TokenMatrix& tokens, const Annotator& annotator,
                                  const EdgeMask& mask) {
  std::vector<SentenceInput> inputs;
  inputs.reserve(tokens.sentence_spans.size());
  for (const auto& s : tokens.sentence_spans)
    inputs.push_back({s.doc, annotator.sentence(ex, static_cast<std::size_t>(s.doc), static_cast<std::size_t>(s.sentence))});
  auto g = build_graph(inputs, annotator.question(ex), mask);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& s = tokens.sentence_spans[i];
    auto& node = g.nodes[i];
    node.title = ex.documents[static_cast<std::size_t>(s.doc)].title;
    node.sentence = s.sentence;
    node.span = static_cast<int>(i);
  }
  return g;
}

}  // namespace sae
