#include "sae/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "sae/rng.hpp"
#include "sae/text.hpp"

namespace sae {

namespace {

constexpr const char* kCls = "[CLS]";
constexpr const char* kSep = "[SEP]";

void push_special(TokenMatrix& m, const char* tok, Segment seg) {
  m.tokens.emplace_back(tok);
  m.segments.push_back(seg);
  m.char_spans.push_back({});
}

std::vector<float> random_vector(Rng& rng, int dim, double scale) {
  std::vector<float> v(static_cast<std::size_t>(dim));
  for (auto& x : v) x = static_cast<float>(rng.uniform(-scale, scale));
  return v;
}

// Uniform(-a, a) has variance a^2/3.
double uniform_scale_for_variance(double var) { return std::sqrt(3.0 * var); }

std::string match_key(std::string_view token) {
  auto norm = normalize_token(token);
  if (norm.empty() || is_stopword(norm) || token == kCls || token == kSep) return {};
  return norm;
}

}  // namespace

TokenMatrix build_layout(const Example& ex, std::span<const std::size_t> docs, int max_len) {
  TokenMatrix m;
  push_special(m, kCls, Segment::Question);
  auto q = tokenize(ex.question);
  const auto q_budget = static_cast<std::size_t>(std::max(0, max_len - 3));
  if (q.size() > q_budget) {
    spdlog::debug("example '{}': question truncated from {} to {} tokens", ex.id, q.size(), q_budget);
    q.resize(q_budget);
  }
  for (auto& t : q) {
    m.tokens.push_back(std::move(t.text));
    m.segments.push_back(Segment::Question);
    m.char_spans.push_back({});
  }
  push_special(m, kSep, Segment::Question);

  bool overflow = false;
  for (std::size_t d : docs) {
    const auto& doc = ex.documents.at(d);
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      if (overflow) {
        ++m.dropped_sentences;
        continue;
      }
      auto toks = tokenize(doc.sentences[s]);
      if (toks.empty()) continue;
      // +1 keeps room for the closing separator.
      if (static_cast<int>(m.tokens.size() + toks.size()) + 1 > max_len) {
        overflow = true;
        ++m.dropped_sentences;
        continue;
      }
      SentenceSpan span;
      span.begin = static_cast<int>(m.tokens.size());
      span.doc = static_cast<int>(d);
      span.sentence = static_cast<int>(s);
      for (auto& t : toks) {
        m.tokens.push_back(std::move(t.text));
        m.segments.push_back(Segment::Context);
        m.char_spans.push_back({static_cast<int>(t.begin), static_cast<int>(t.end)});
      }
      span.end = static_cast<int>(m.tokens.size());
      m.sentence_spans.push_back(span);
    }
  }
  push_special(m, kSep, Segment::Context);
  m.length = static_cast<int>(m.tokens.size());
  if (m.dropped_sentences > 0)
    spdlog::debug("example '{}': dropped {} trailing sentences to fit {} tokens", ex.id,
                  m.dropped_sentences, max_len);
  return m;
}

std::vector<float> document_summaries(const EmbeddingSource& source, const Example& ex) {
  const auto d = static_cast<std::size_t>(source.dim());
  std::vector<float> out(ex.documents.size() * d);
  for (std::size_t i = 0; i < ex.documents.size(); ++i) {
    const auto m = source.selector_input(ex, i);
    const auto row = m.row(m.cls_index);
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return out;
}

ToyEmbedder::ToyEmbedder(ToyEmbedderConfig config) : config_(config) {
  const int d = config_.dim;
  const int taps = 2 * config_.window + 1;
  Rng rng = Rng::substream(config_.seed, "toy-embedder");
  // Inputs z have per-dimension variance ~2; aim for unit variance in the
  // pre-activation sum over taps * d terms.
  const double w_scale = uniform_scale_for_variance(1.0 / (2.0 * taps * d));
  mixing_ = random_vector(rng, taps * d * d, w_scale);
  bias_ = random_vector(rng, d, 0.1);
  segment_[0] = random_vector(rng, d, uniform_scale_for_variance(0.25));
  segment_[1] = random_vector(rng, d, uniform_scale_for_variance(0.25));
  match_dir_ = random_vector(rng, d, uniform_scale_for_variance(1.0));
  coverage_dir_ = random_vector(rng, d, uniform_scale_for_variance(1.0));
}

std::vector<float> ToyEmbedder::token_vector(std::string_view token) const {
  std::string key(token);
  for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  Rng rng(mix64(fnv1a(key) ^ mix64(config_.seed + 0x51ed27)));
  return random_vector(rng, config_.dim, uniform_scale_for_variance(1.0));
}

TokenMatrix ToyEmbedder::selector_input(const Example& ex, std::size_t doc) const {
  const std::size_t docs[] = {doc};
  auto m = build_layout(ex, docs, config_.max_len);
  embed(m);
  return m;
}

TokenMatrix ToyEmbedder::reasoner_input(const Example& ex, std::span<const std::size_t> docs) const {
  auto m = build_layout(ex, docs, config_.max_len);
  embed(m);
  return m;
}

void ToyEmbedder::embed(TokenMatrix& m) const {
  const int d = config_.dim;
  const int L = m.length;
  const auto ud = static_cast<std::size_t>(d);

  std::vector<std::string> keys(static_cast<std::size_t>(L));
  std::unordered_set<std::string> q_keys, c_keys;
  for (int t = 0; t < L; ++t) {
    keys[t] = match_key(m.tokens[t]);
    if (keys[t].empty()) continue;
    (m.segments[t] == Segment::Question ? q_keys : c_keys).insert(keys[t]);
  }
  std::vector<char> matched(static_cast<std::size_t>(L), 0);
  for (int t = 0; t < L; ++t) {
    if (keys[t].empty()) continue;
    const auto& other = m.segments[t] == Segment::Question ? c_keys : q_keys;
    matched[t] = other.contains(keys[t]) ? 1 : 0;
  }

  auto position = [d](int t, int i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / d);
    return static_cast<float>(i % 2 == 0 ? std::sin(t * freq) : std::cos(t * freq));
  };

  std::vector<float> z(static_cast<std::size_t>(L) * ud);
  int q_count = 0, c_count = 0, c_matched = 0;
  for (int t = 0; t < L; ++t) {
    const auto base = token_vector(m.tokens[t]);
    const auto& seg = segment_[static_cast<int>(m.segments[t])];
    float* zt = z.data() + static_cast<std::size_t>(t) * ud;
    for (int i = 0; i < d; ++i)
      zt[i] = base[i] + position(t, i) + seg[i] + (matched[t] ? match_dir_[i] : 0.0f);
    if (keys[t].empty()) continue;
    if (m.segments[t] == Segment::Question) ++q_count;
    else {
      ++c_count;
      c_matched += matched[t];
    }
  }

  // Summary features on the CLS row: where in the question the matches are,
  // and how much of the context is covered.
  if (L > 0) {
    float* z0 = z.data() + static_cast<std::size_t>(m.cls_index) * ud;
    const float q_norm = 4.0f / static_cast<float>(std::max(1, q_count));
    for (int t = 0; t < L; ++t) {
      if (m.segments[t] != Segment::Question || !matched[t]) continue;
      for (int i = 0; i < d; ++i) z0[i] += q_norm * (position(t, i) + match_dir_[i]);
    }
    const float coverage = 4.0f * static_cast<float>(c_matched) / static_cast<float>(std::max(1, c_count));
    for (int i = 0; i < d; ++i) z0[i] += coverage * coverage_dir_[i];

    // Sentence context: every token of a context sentence sees which
    // question positions that sentence matches.
    std::vector<float> pooled(ud);
    for (const auto& span : m.sentence_spans) {
      std::unordered_set<std::string> s_keys;
      for (int t = span.begin; t < span.end; ++t)
        if (!keys[t].empty()) s_keys.insert(keys[t]);
      std::fill(pooled.begin(), pooled.end(), 0.0f);
      bool any = false;
      for (int t = 0; t < L; ++t) {
        if (m.segments[t] != Segment::Question || keys[t].empty() || !s_keys.contains(keys[t])) continue;
        any = true;
        for (int i = 0; i < d; ++i) pooled[i] += q_norm * (position(t, i) + match_dir_[i]);
      }
      if (!any) continue;
      for (int t = span.begin; t < span.end; ++t) {
        float* zt = z.data() + static_cast<std::size_t>(t) * ud;
        for (int i = 0; i < d; ++i) zt[i] += pooled[i];
      }
    }
  }

  const int w = config_.window;
  m.dim = d;
  m.values.assign(static_cast<std::size_t>(L) * ud, 0.0f);
  std::vector<double> acc(ud);
  for (int t = 0; t < L; ++t) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int k = -w; k <= w; ++k) {
      const int u = t + k;
      if (u < 0 || u >= L) continue;
      const float* W = mixing_.data() + static_cast<std::size_t>(k + w) * ud * ud;
      const float* zu = z.data() + static_cast<std::size_t>(u) * ud;
      for (int i = 0; i < d; ++i) {
        float s = 0.0f;
        const float* Wi = W + static_cast<std::size_t>(i) * ud;
        for (int j = 0; j < d; ++j) s += Wi[j] * zu[j];
        acc[i] += s;
      }
    }
    float* ht = m.values.data() + static_cast<std::size_t>(t) * ud;
    const float* zt = z.data() + static_cast<std::size_t>(t) * ud;
    for (int i = 0; i < d; ++i) ht[i] = zt[i] + static_cast<float>(std::tanh(acc[i] + bias_[i]));
  }
}

}  // namespace sae
