#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ncv::evaluate {

/// Scores at or above this are called PD.
inline constexpr double kDecisionThreshold = 0.5;

inline int decide(double score) { return score >= kDecisionThreshold ? 1 : 0; }

enum class AggregationRule { Mean, Median, Majority, GMean, Max, Min };

inline constexpr std::array<AggregationRule, 6> kAllRules = {AggregationRule::Mean,    AggregationRule::Median,
                                                             AggregationRule::Majority, AggregationRule::GMean,
                                                             AggregationRule::Max,     AggregationRule::Min};

std::string to_string(AggregationRule rule);
/// Throws ConfigError for unknown names.
AggregationRule rule_from_string(const std::string& name);

/// Patient score from window probabilities. Majority is the fraction of
/// windows at or above the threshold; GMean is 0 if any window is 0.
double aggregate(std::span<const double> window_probs, AggregationRule rule);

struct PatientDecision {
  std::string patient_id;
  int label = 0;
  std::vector<double> window_probs;
  AggregationRule rule = AggregationRule::Mean;
  double score = 0.0;
  int decision = 0;
};

PatientDecision decide_patient(std::string patient_id, int label, std::vector<double> window_probs,
                               AggregationRule rule);

/// Threshold metrics with PD as the positive class. AUC needs both classes;
/// precision needs at least one predicted positive; recall needs at least one
/// actual positive. Missing values stay empty rather than becoming 0.
struct MetricsRow {
  double accuracy = 0.0;
  std::optional<double> auc;
  std::optional<double> precision;
  std::optional<double> recall;
  std::size_t n = 0;
};

MetricsRow compute_metrics(std::span<const double> scores, std::span<const int> labels);
MetricsRow compute_metrics(std::span<const PatientDecision> decisions);

/// Mann-Whitney AUC with ties counted one half. Empty if a class is missing.
std::optional<double> auc(std::span<const double> scores, std::span<const int> labels);

struct Stat {
  std::optional<double> mean;
  std::optional<double> std;  // sample (n-1); 0 for a single value
};

Stat summarize_values(std::span<const double> values);

struct Summary {
  Stat accuracy, auc, precision, recall;
};

/// Per-metric mean and sample std over folds, skipping folds where the
/// metric is absent.
Summary summarize(std::span<const MetricsRow> folds);

}  // namespace ncv::evaluate
