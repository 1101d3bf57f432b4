#include "sae/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "sae/error.hpp"
#include "sae/text.hpp"

namespace sae {

using json = nlohmann::ordered_json;

namespace {

Score from_counts(double tp, double fp, double fn) {
  Score s;
  s.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  s.em = fp + fn == 0 ? 1.0 : 0.0;
  return s;
}

bool is_special(const std::string& s) { return s == "yes" || s == "no" || s == "noanswer"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Accumulator {
  Metrics m;
  double sel_em = 0, sel_recall = 0, sel_acc = 0;

  void add(const Score& a, const Score& s, const Score& j) {
    ++m.n;
    m.ans_em += a.em;
    m.ans_f1 += a.f1;
    m.sup_em += s.em;
    m.sup_f1 += s.f1;
    m.joint_em += j.em;
    m.joint_f1 += j.f1;
  }
  void add(const SelectorScore& s) {
    ++m.selector_n;
    sel_em += s.em;
    sel_recall += s.recall;
    if (s.acc_span) {
      ++m.acc_span_n;
      sel_acc += *s.acc_span;
    }
  }
  Metrics finish() const {
    Metrics out = m;
    if (out.n) {
      const double n = static_cast<double>(out.n);
      out.ans_em /= n, out.ans_f1 /= n, out.sup_em /= n, out.sup_f1 /= n, out.joint_em /= n, out.joint_f1 /= n;
    }
    if (out.selector_n) {
      out.em_s = sel_em / static_cast<double>(out.selector_n);
      out.recall_s = sel_recall / static_cast<double>(out.selector_n);
    }
    if (out.acc_span_n) out.acc_span = sel_acc / static_cast<double>(out.acc_span_n);
    return out;
  }
};

json metrics_json(const Metrics& m) {
  json j;
  j["n"] = m.n;
  j["ans_em"] = m.ans_em;
  j["ans_f1"] = m.ans_f1;
  j["sup_em"] = m.sup_em;
  j["sup_f1"] = m.sup_f1;
  j["joint_em"] = m.joint_em;
  j["joint_f1"] = m.joint_f1;
  if (m.selector_n) {
    j["selector_n"] = m.selector_n;
    j["em_s"] = m.em_s;
    j["recall_s"] = m.recall_s;
    if (m.acc_span_n)
      j["acc_span"] = m.acc_span;
    else
      j["acc_span"] = nullptr;
  }
  return j;
}

}  // namespace

Score answer_metrics(std::string_view pred, std::string_view gold) {
  const auto p = normalize_answer(pred), g = normalize_answer(gold);
  Score s;
  s.em = p == g ? 1.0 : 0.0;
  if ((is_special(p) || is_special(g)) && p != g) return s;
  const auto pt = split_words(p), gt = split_words(g);
  std::map<std::string, int> counts;
  for (const auto& t : gt) ++counts[t];
  int same = 0;
  for (const auto& t : pt) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++same;
    }
  }
  if (same == 0) return s;
  s.precision = static_cast<double>(same) / static_cast<double>(pt.size());
  s.recall = static_cast<double>(same) / static_cast<double>(gt.size());
  s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

Score support_metrics(std::span<const SupportingFact> pred, std::span<const SupportingFact> gold) {
  const std::set<SupportingFact> p(pred.begin(), pred.end()), g(gold.begin(), gold.end());
  double tp = 0, fp = 0;
  for (const auto& f : p) (g.count(f) ? tp : fp) += 1;
  const double fn = static_cast<double>(g.size()) - tp;
  return from_counts(tp, fp, fn);
}

Score joint_metrics(const Score& a, const Score& s) {
  Score j;
  j.precision = a.precision * s.precision;
  j.recall = a.recall * s.recall;
  j.f1 = j.precision + j.recall > 0 ? 2 * j.precision * j.recall / (j.precision + j.recall) : 0.0;
  j.em = a.em * s.em;
  return j;
}

SelectorScore selector_metrics(std::span<const std::size_t> selected, const Example& gold) {
  const auto ex = gold.labels_derived ? gold : derive_gold_labels(gold);
  const auto gold_docs = ex.gold_documents();
  const std::set<std::size_t> sel(selected.begin(), selected.end());
  const std::set<std::size_t> g(gold_docs.begin(), gold_docs.end());
  SelectorScore s;
  s.em = sel == g ? 1.0 : 0.0;
  std::size_t hit = 0;
  for (auto d : g) hit += sel.count(d);
  s.recall = g.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(g.size());
  for (std::size_t d = 0; d < ex.documents.size(); ++d)
    if (ex.documents[d].score == 2) {
      s.acc_span = sel.count(d) ? 1.0 : 0.0;
      break;
    }
  return s;
}

Predictions parse_predictions(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("prediction file: ") + e.what(), e.byte);
  }
  if (!j.is_object()) throw ParseError("prediction file: top level must be an object", 0);
  Predictions p;
  try {
    if (j.contains("answer"))
      for (const auto& [id, v] : j["answer"].items()) p.answer[id] = v.get<std::string>();
    if (j.contains("sp"))
      for (const auto& [id, v] : j["sp"].items()) {
        auto& facts = p.sp[id];
        for (const auto& f : v) facts.push_back({f.at(0).get<std::string>(), f.at(1).get<int>()});
        std::sort(facts.begin(), facts.end());
      }
    if (j.contains("docs"))
      for (const auto& [id, v] : j["docs"].items()) p.docs[id] = v.get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("prediction file: ") + e.what(), 0);
  }
  return p;
}

Predictions load_predictions(const std::string& path) { return parse_predictions(read_file(path)); }

std::string serialize_predictions(const Predictions& p) {
  json j;
  j["answer"] = json::object();
  for (const auto& [id, a] : p.answer) j["answer"][id] = a;
  j["sp"] = json::object();
  for (const auto& [id, facts] : p.sp) {
    json arr = json::array();
    for (const auto& f : facts) arr.push_back(json::array({f.title, f.sentence}));
    j["sp"][id] = arr;
  }
  if (!p.docs.empty()) {
    j["docs"] = json::object();
    for (const auto& [id, titles] : p.docs) j["docs"][id] = titles;
  }
  return j.dump(1) + "\n";
}

void save_predictions(const std::string& path, const Predictions& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << serialize_predictions(p);
}

Predictions gold_predictions(const std::vector<Example>& gold) {
  Predictions p;
  for (const auto& ex : gold) {
    p.answer[ex.id] = ex.answer;
    p.sp[ex.id] = ex.supporting_facts;
    const auto derived = ex.labels_derived ? ex : derive_gold_labels(ex);
    auto& titles = p.docs[ex.id];
    for (auto d : derived.gold_documents()) titles.push_back(ex.documents[d].title);
  }
  return p;
}

EvalReport evaluate(const Predictions& pred, const std::vector<Example>& gold) {
  Accumulator all, bridge, comparison;
  for (const auto& ex : gold) {
    auto& sub = ex.reasoning_type == ReasoningType::Bridge ? bridge : comparison;
    const auto a_it = pred.answer.find(ex.id);
    const Score a = a_it == pred.answer.end() ? Score{} : answer_metrics(a_it->second, ex.answer);
    const auto s_it = pred.sp.find(ex.id);
    const Score s = s_it == pred.sp.end() ? Score{} : support_metrics(s_it->second, ex.supporting_facts);
    const Score j = joint_metrics(a, s);
    all.add(a, s, j);
    sub.add(a, s, j);
    if (auto d_it = pred.docs.find(ex.id); d_it != pred.docs.end()) {
      std::vector<std::size_t> selected;
      for (const auto& title : d_it->second)
        for (std::size_t d = 0; d < ex.documents.size(); ++d)
          if (ex.documents[d].title == title) {
            selected.push_back(d);
            break;
          }
      const auto sel = selector_metrics(selected, ex);
      all.add(sel);
      sub.add(sel);
    }
  }
  return {all.finish(), bridge.finish(), comparison.finish()};
}

std::string report_json(const EvalReport& r, bool by_type) {
  json j = metrics_json(r.overall);
  if (by_type) {
    j["bridge"] = metrics_json(r.bridge);
    j["comparison"] = metrics_json(r.comparison);
  }
  return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& r, bool by_type) {
  std::string out = fmt::format("{:<12}{:>7}{:>9}{:>9}{:>9}{:>9}{:>10}{:>10}\n", "split", "n", "ans_em", "ans_f1",
                                "sup_em", "sup_f1", "joint_em", "joint_f1");
  auto row = [&](const char* name, const Metrics& m) {
    out += fmt::format("{:<12}{:>7}{:>9.4f}{:>9.4f}{:>9.4f}{:>9.4f}{:>10.4f}{:>10.4f}\n", name, m.n, m.ans_em, m.ans_f1,
                       m.sup_em, m.sup_f1, m.joint_em, m.joint_f1);
  };
  row("overall", r.overall);
  if (by_type) {
    row("bridge", r.bridge);
    row("comparison", r.comparison);
  }
  if (r.overall.selector_n) {
    out += fmt::format("\n{:<12}{:>7}{:>9}{:>10}{:>10}\n", "selector", "n", "EM_S", "Recall_S", "Acc_span");
    auto sel = [&](const char* name, const Metrics& m) {
      const std::string acc = m.acc_span_n ? fmt::format("{:.4f}", m.acc_span) : "-";
      out += fmt::format("{:<12}{:>7}{:>9.4f}{:>10.4f}{:>10}\n", name, m.selector_n, m.em_s, m.recall_s, acc);
    };
    sel("overall", r.overall);
    if (by_type) {
      sel("bridge", r.bridge);
      sel("comparison", r.comparison);
    }
  }
  return out;
}

}  // namespace sae
