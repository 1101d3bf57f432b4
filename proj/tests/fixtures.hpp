#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sae/annotator.hpp"
#include "sae/data_model.hpp"
#include "sae/diff/matrix.hpp"
#include "sae/graph.hpp"
#include "sae/rng.hpp"
#include "sae/selector.hpp"
#include "sae/token_matrix.hpp"

namespace sae::testing {

// The Kiss and Tell / Shirley Temple bridge question plus one distractor.
inline Example kiss_and_tell() {
  Example ex;
  ex.id = "5a8b57f25542995d1e6f1371";
  ex.question = "What government position was held by the woman who portrayed Corliss Archer in the film Kiss and Tell?";
  ex.answer = "Chief of Protocol";
  ex.reasoning_type = ReasoningType::Bridge;
  ex.difficulty = "hard";
  ex.documents = {
      {"Meet Corliss Archer",
       {"Meet Corliss Archer is an American television sitcom that aired on CBS.",
        "Its lead character was played by Ann Baker."}},
      {"Kiss and Tell (1945 film)",
       {"Kiss and Tell is a 1945 American comedy film starring then 17-year-old Shirley Temple as Corliss Archer.",
        "In the film, two teenage girls cause their respective parents much concern when they start to become "
        "interested in boys."}},
      {"Shirley Temple",
       {"Shirley Temple Black (April 23, 1928 - February 10, 2014) was an American actress, singer, dancer, "
        "businesswoman, and diplomat.",
        "As an adult, she was named United States ambassador to Ghana and to Czechoslovakia and also served as "
        "Chief of Protocol of the United States."}},
  };
  ex.supporting_facts = {{"Kiss and Tell (1945 film)", 0}, {"Shirley Temple", 0}, {"Shirley Temple", 1}};
  return ex;
}

inline Example yes_no_example() {
  Example ex;
  ex.id = "cmp-1";
  ex.question = "Are Alpha Dorn and Beta Kell of the same nationality?";
  ex.answer = "yes";
  ex.reasoning_type = ReasoningType::Comparison;
  ex.documents = {{"Alpha Dorn", {"Alpha Dorn is a Veltan painter."}},
                  {"Other", {"Nothing to see here."}},
                  {"Beta Kell", {"Beta Kell is a Veltan poet."}}};
  ex.supporting_facts = {{"Alpha Dorn", 0}, {"Beta Kell", 0}};
  return ex;
}

template <typename T>
diff::Matrix<T> random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  diff::Matrix<T> m(rows, cols);
  for (auto& v : m.flat()) v = static_cast<T>(scale * rng.normal());
  return m;
}

class TempDir {
 public:
  TempDir() {
    Rng rng(static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)) ^ fnv1a(std::to_string(counter()++)));
    path_ = std::filesystem::temp_directory_path() / ("sae-test-" + std::to_string(rng.next()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// ---- brute-force oracles ----

// Counts by direct comparison, then picks k times the best remaining
// document by a full scan.
inline std::vector<int> brute_force_relevance(const diff::Matrix<double>& p, int k) {
  const int n = p.rows();
  std::vector<int> count(n, 0);
  std::vector<double> total(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (p(i, j) > 0.5) ++count[i];
      total[i] += p(i, j);
    }
  std::vector<bool> taken(n, false);
  std::vector<int> out;
  for (int round = 0; round < std::min(k, n); ++round) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best < 0 || count[i] > count[best] || (count[i] == count[best] && total[i] > total[best])) best = i;
    }
    taken[best] = true;
    out.push_back(best);
  }
  return out;
}

// Edge set {(type, a, b)} with a < b from a pairwise scan over raw strings.
inline std::set<std::tuple<int, int, int>> brute_force_edges(const std::vector<SentenceInput>& s, const MentionSet& q,
                                                             const EdgeMask& mask) {
  auto shares = [](const std::vector<std::string>& x, const std::vector<std::string>& y) {
    for (const auto& a : x)
      for (const auto& b : y)
        if (a == b) return true;
    return false;
  };
  std::set<std::tuple<int, int, int>> out;
  const int n = static_cast<int>(s.size());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const auto& ka = s[a].mentions.keys();
      const auto& kb = s[b].mentions.keys();
      if (s[a].doc == s[b].doc) {
        if (mask.has(1)) out.emplace(1, a, b);
        continue;
      }
      if (mask.has(2) && shares(ka, q.keys()) && shares(kb, q.keys())) out.emplace(2, a, b);
      if (mask.has(3) && shares(ka, kb)) out.emplace(3, a, b);
    }
  return out;
}

inline std::set<std::tuple<int, int, int>> graph_edges(const SentenceGraph& g) {
  std::set<std::tuple<int, int, int>> out;
  for (int t = 1; t <= kNumEdgeTypes; ++t)
    for (const auto& [a, b] : g.edges(t)) out.emplace(t, a, b);
  return out;
}

struct BruteSpan {
  int start = -1;
  int end = -1;
};

// Every (s, e) pair; valid when both ends sit in the same answer sentence,
// s <= e and the span is at most max_span tokens.
inline BruteSpan brute_force_span(const std::vector<double>& start, const std::vector<double>& end,
                                  const std::vector<int>& sentence, int max_span) {
  BruteSpan best;
  double best_score = 0.0;
  const int n = static_cast<int>(start.size());
  for (int s = 0; s < n; ++s)
    for (int e = 0; e < n; ++e) {
      if (e < s || e - s + 1 > max_span) continue;
      if (sentence[s] < 0 || sentence[s] != sentence[e]) continue;
      const double score = start[s] + end[e];
      if (best.start < 0 || score > best_score) {
        best = {s, e};
        best_score = score;
      }
    }
  return best;
}

}  // namespace sae::testing
