#include "sae/selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sae/error.hpp"

namespace sae {

using diff::Matrix;
using diff::Tape;
using diff::Var;

std::string_view to_string(SelectorLoss l) { return l == SelectorLoss::Pairwise ? "pairwise" : "bce"; }
std::string_view to_string(ScoreScheme s) { return s == ScoreScheme::ZeroOneTwo ? "012" : "01"; }

SelectorLoss parse_selector_loss(std::string_view s) {
  if (s == "pairwise") return SelectorLoss::Pairwise;
  if (s == "bce") return SelectorLoss::Bce;
  throw Error("unknown selector loss '" + std::string(s) + "' (expected pairwise or bce)");
}

ScoreScheme parse_score_scheme(std::string_view s) {
  if (s == "012") return ScoreScheme::ZeroOneTwo;
  if (s == "01") return ScoreScheme::ZeroOne;
  throw Error("unknown score scheme '" + std::string(s) + "' (expected 012 or 01)");
}

std::vector<PairLabel> make_pair_labels(std::span<const int> scores) {
  std::vector<PairLabel> out;
  const int n = static_cast<int>(scores.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) out.push_back({i, j, scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(j)] ? 1 : 0});
  return out;
}

std::vector<int> scheme_scores(std::span<const int> scores, ScoreScheme scheme) {
  std::vector<int> out(scores.begin(), scores.end());
  if (scheme == ScoreScheme::ZeroOne)
    for (auto& s : out) s = std::min(s, 1);
  return out;
}

double pairwise_bce(const Matrix<double>& probs, std::span<const PairLabel> labels) {
  if (labels.empty()) throw Error("pairwise loss needs at least two documents");
  double total = 0.0;
  for (const auto& l : labels) {
    const double p = std::clamp(probs(l.i, l.j), 1e-12, 1.0 - 1e-12);
    total -= l.label ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(labels.size());
}

double baseline_bce(std::span<const double> probs, std::span<const int> targets) {
  if (probs.size() != targets.size()) throw ShapeError("baseline_bce: probabilities and targets differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-12, 1.0 - 1e-12);
    total -= targets[i] ? std::log(p) : std::log1p(-p);
  }
  return total;
}

RelevanceVector relevance_rank(const Matrix<double>& probs, int k) {
  if (probs.rows() != probs.cols()) throw ShapeError("relevance_rank: score matrix " + probs.shape_str() + " is not square");
  const int n = probs.rows();
  RelevanceVector out;
  out.counts.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> sums(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (probs(i, j) > 0.5) ++out.counts[static_cast<std::size_t>(i)];
      sums[static_cast<std::size_t>(i)] += probs(i, j);
    }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    if (out.counts[ua] != out.counts[ub]) return out.counts[ua] > out.counts[ub];
    if (sums[ua] != sums[ub]) return sums[ua] > sums[ub];
    return a < b;
  });
  order.resize(static_cast<std::size_t>(std::clamp(k, 0, n)));
  out.selected = std::move(order);
  return out;
}

template <typename T>
Selector<T>::Selector(SelectorConfig config) : config_(config) {
  if (config_.dim <= 0) throw Error("selector dimension must be positive");
  if (config_.heads <= 0 || config_.dim % config_.heads != 0)
    throw Error("selector heads (" + std::to_string(config_.heads) + ") must divide the dimension (" +
                std::to_string(config_.dim) + ")");
  Rng rng = Rng::substream(config_.seed, "selector/init");
  const int d = config_.dim;
  wq_ = Linear<T>(params_, "mhsa.query", d, d, rng, false);
  wk_ = Linear<T>(params_, "mhsa.key", d, d, rng, false);
  wv_ = Linear<T>(params_, "mhsa.value", d, d, rng, false);
  wo_ = Linear<T>(params_, "mhsa.output", d, d, rng, false);
  Matrix<T> w(d, d);
  fill_uniform(w, rng, std::sqrt(6.0 / (2.0 * d)));
  bilinear_ = &params_.add("pair.bilinear", std::move(w));
  left_ = Linear<T>(params_, "pair.left", d, 1, rng, false);
  right_ = Linear<T>(params_, "pair.right", d, 1, rng, false);
  pair_bias_ = &params_.add("pair.bias", Matrix<T>(1, 1));
  doc_head_ = Linear<T>(params_, "doc", d, 1, rng, true);
}

template <typename T>
std::vector<Var<T>> Selector<T>::attention(Var<T> x) const {
  const int dk = config_.dim / config_.heads;
  auto q = wq_(x), k = wk_(x);
  const T inv = T{1} / static_cast<T>(std::sqrt(static_cast<double>(dk)));
  std::vector<Var<T>> out;
  for (int h = 0; h < config_.heads; ++h) {
    auto qh = diff::slice_cols(q, h * dk, (h + 1) * dk);
    auto kh = diff::slice_cols(k, h * dk, (h + 1) * dk);
    out.push_back(diff::softmax_rows(diff::scale(diff::matmul_nt(qh, kh), inv)));
  }
  return out;
}

template <typename T>
Var<T> Selector<T>::encode(Var<T> x) const {
  if (x.cols() != config_.dim)
    throw ShapeError("selector: summaries " + x.value().shape_str() + " vs model dim " + std::to_string(config_.dim));
  if (!config_.mhsa) return x;
  const int dk = config_.dim / config_.heads;
  auto v = wv_(x);
  auto weights = attention(x);
  std::vector<Var<T>> heads;
  for (int h = 0; h < config_.heads; ++h)
    heads.push_back(diff::matmul(weights[static_cast<std::size_t>(h)], diff::slice_cols(v, h * dk, (h + 1) * dk)));
  return wo_(diff::concat_cols<T>(heads));
}

template <typename T>
Var<T> Selector<T>::pair_logits(Var<T> v) const {
  auto& tape = v.tape();
  const int n = v.rows();
  auto ones_col = tape.constant(Matrix<T>(n, 1, T{1}));
  auto ones_row = tape.constant(Matrix<T>(1, n, T{1}));
  auto bil = diff::matmul_nt(diff::matmul(v, tape.param(*bilinear_)), v);
  auto left = diff::matmul(left_(v), ones_row);
  auto right = diff::matmul(ones_col, diff::transpose(right_(v)));
  auto bias = diff::matmul(ones_col, diff::matmul(tape.param(*pair_bias_), ones_row));
  return diff::add(diff::add(bil, left), diff::add(right, bias));
}

template <typename T>
Var<T> Selector<T>::doc_logits(Var<T> v) const {
  return doc_head_(v);
}

template <typename T>
Var<T> Selector<T>::loss(Tape<T>& tape, const Matrix<T>& summaries, std::span<const int> scores) const {
  const int n = summaries.rows();
  if (static_cast<int>(scores.size()) != n)
    throw ShapeError("selector loss: " + std::to_string(scores.size()) + " scores for " + std::to_string(n) + " documents");
  auto v = encode(tape.constant(summaries));
  if (config_.loss == SelectorLoss::Bce) {
    Matrix<T> t(n, 1);
    for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = scores[static_cast<std::size_t>(i)] > 0 ? T{1} : T{0};
    return diff::scale(diff::bce_with_logits(doc_logits(v), t), static_cast<T>(n));
  }
  if (n < 2) throw Error("pairwise loss needs at least two documents");
  const auto s = scheme_scores(scores, config_.scores);
  Matrix<T> labels(n, n), mask(n, n);
  for (const auto& l : make_pair_labels(s)) {
    labels(l.i, l.j) = static_cast<T>(l.label);
    mask(l.i, l.j) = T{1};
  }
  return diff::bce_with_logits(pair_logits(v), labels, &mask);
}

template <typename T>
Matrix<double> Selector<T>::pair_probabilities(const Matrix<T>& summaries) const {
  Tape<T> tape;
  const auto& logits = pair_logits(encode(tape.constant(summaries))).value();
  Matrix<double> p(logits.rows(), logits.cols());
  for (int i = 0; i < p.rows(); ++i)
    for (int j = 0; j < p.cols(); ++j)
      p(i, j) = i == j ? 0.0 : diff::sigmoid_value(static_cast<double>(logits(i, j)));
  return p;
}

template <typename T>
std::vector<double> Selector<T>::doc_probabilities(const Matrix<T>& summaries) const {
  Tape<T> tape;
  const auto& logits = doc_logits(encode(tape.constant(summaries))).value();
  std::vector<double> out;
  for (T v : logits.flat()) out.push_back(diff::sigmoid_value(static_cast<double>(v)));
  return out;
}

template <typename T>
RelevanceVector Selector<T>::select(const Matrix<T>& summaries, int k) const {
  if (config_.loss == SelectorLoss::Pairwise) return relevance_rank(pair_probabilities(summaries), k);
  const auto probs = doc_probabilities(summaries);
  RelevanceVector out;
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
  });
  order.resize(std::min(order.size(), static_cast<std::size_t>(std::max(k, 0))));
  out.selected = std::move(order);
  return out;
}

template class Selector<float>;
template class Selector<double>;

}  // namespace sae
