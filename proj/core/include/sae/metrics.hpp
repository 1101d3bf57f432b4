#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sae/data_model.hpp"

namespace sae {

struct Score {
  double em = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// EM and token-multiset F1 after answer normalization. yes/no/noanswer
/// only score against an identical string.
Score answer_metrics(std::string_view pred, std::string_view gold);

/// EM on set equality, F1 over the intersection.
Score support_metrics(std::span<const SupportingFact> pred, std::span<const SupportingFact> gold);

/// Per-example product of EMs; F1 from the products of precisions and recalls.
Score joint_metrics(const Score& answer, const Score& support);

struct SelectorScore {
  double em = 0.0;
  double recall = 0.0;
  /// Whether the answer document was selected; absent when no document has S = 2.
  std::optional<double> acc_span;
};

/// One example's selector metrics for a set of chosen document indices.
SelectorScore selector_metrics(std::span<const std::size_t> selected, const Example& gold);

struct Metrics {
  std::size_t n = 0;
  double ans_em = 0.0, ans_f1 = 0.0;
  double sup_em = 0.0, sup_f1 = 0.0;
  double joint_em = 0.0, joint_f1 = 0.0;
  /// Selector metrics over the examples that carry document predictions.
  std::size_t selector_n = 0;
  double em_s = 0.0, recall_s = 0.0, acc_span = 0.0;
  std::size_t acc_span_n = 0;
};

struct EvalReport {
  Metrics overall;
  Metrics bridge;
  Metrics comparison;
};

/// Prediction file: {"answer": {id: text}, "sp": {id: [[title, idx], ...]}}
/// plus an optional "docs": {id: [title, ...]} for the selector metrics.
struct Predictions {
  std::map<std::string, std::string> answer;
  std::map<std::string, std::vector<SupportingFact>> sp;
  std::map<std::string, std::vector<std::string>> docs;
  bool operator==(const Predictions&) const = default;
};

Predictions parse_predictions(std::string_view json);
Predictions load_predictions(const std::string& path);
std::string serialize_predictions(const Predictions& p);
void save_predictions(const std::string& path, const Predictions& p);

/// Gold answers as a prediction file (handy for sanity checks).
Predictions gold_predictions(const std::vector<Example>& gold);

/// Averages over every gold example; a missing prediction scores 0.
EvalReport evaluate(const Predictions& pred, const std::vector<Example>& gold);

std::string report_json(const EvalReport& r, bool by_type = true);
std::string report_table(const EvalReport& r, bool by_type = true);

}  // namespace sae
