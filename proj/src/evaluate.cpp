#include "ncv/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ncv/errors.hpp"

namespace ncv::evaluate {

std::string to_string(AggregationRule rule) {
  switch (rule) {
    case AggregationRule::Mean:
      return "mean";
    case AggregationRule::Median:
      return "median";
    case AggregationRule::Majority:
      return "majority";
    case AggregationRule::GMean:
      return "gmean";
    case AggregationRule::Max:
      return "max";
    case AggregationRule::Min:
      return "min";
  }
  return "?";
}

AggregationRule rule_from_string(const std::string& name) {
  for (auto r : kAllRules)
    if (to_string(r) == name) return r;
  throw ConfigError("unknown aggregation rule '" + name + "' (expected mean|median|majority|gmean|max|min)");
}

double aggregate(std::span<const double> p, AggregationRule rule) {
  if (p.empty()) throw std::invalid_argument("aggregate: no window probabilities");
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("aggregate: probabilities must lie in [0, 1]");
  const double n = static_cast<double>(p.size());
  switch (rule) {
    case AggregationRule::Mean:
      return std::accumulate(p.begin(), p.end(), 0.0) / n;
    case AggregationRule::Median: {
      std::vector<double> s(p.begin(), p.end());
      std::sort(s.begin(), s.end());
      const std::size_t m = s.size() / 2;
      return s.size() % 2 == 1 ? s[m] : 0.5 * (s[m - 1] + s[m]);
    }
    case AggregationRule::Majority:
      return static_cast<double>(std::count_if(p.begin(), p.end(), [](double v) { return decide(v) == 1; })) / n;
    case AggregationRule::GMean: {
      double log_sum = 0.0;
      for (double v : p) {
        if (v == 0.0) return 0.0;
        log_sum += std::log(v);
      }
      // exp(mean log) can overshoot the extremes by an ulp.
      const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
      return std::clamp(std::exp(log_sum / n), *lo, *hi);
    }
    case AggregationRule::Max:
      return *std::max_element(p.begin(), p.end());
    case AggregationRule::Min:
      return *std::min_element(p.begin(), p.end());
  }
  return 0.0;
}

PatientDecision decide_patient(std::string patient_id, int label, std::vector<double> window_probs,
                               AggregationRule rule) {
  PatientDecision d;
  d.patient_id = std::move(patient_id);
  d.label = label;
  d.window_probs = std::move(window_probs);
  d.rule = rule;
  d.score = aggregate(d.window_probs, rule);
  d.decision = decide(d.score);
  return d;
}

std::optional<double> auc(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y == 1 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the average rank keeps everything integral.
  double pos_rank_sum2 = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double rank2 = static_cast<double>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] == 1) pos_rank_sum2 += rank2;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u2 = pos_rank_sum2 - np * (np + 1.0);
  return (u2 / 2.0) / (np * static_cast<double>(n_neg));
}

MetricsRow compute_metrics(std::span<const double> scores, std::span<const int> labels) {
  if (scores.empty()) throw std::invalid_argument("compute_metrics: no scores");
  if (scores.size() != labels.size()) throw std::invalid_argument("compute_metrics: size mismatch");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int pred = decide(scores[i]);
    if (pred == 1 && labels[i] == 1) ++tp;
    if (pred == 1 && labels[i] == 0) ++fp;
    if (pred == 0 && labels[i] == 0) ++tn;
    if (pred == 0 && labels[i] == 1) ++fn;
  }
  MetricsRow row;
  row.n = scores.size();
  row.accuracy = static_cast<double>(tp + tn) / static_cast<double>(row.n);
  if (tp + fp > 0) row.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) row.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  row.auc = auc(scores, labels);
  return row;
}

MetricsRow compute_metrics(std::span<const PatientDecision> decisions) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& d : decisions) {
    scores.push_back(d.score);
    labels.push_back(d.label);
  }
  return compute_metrics(scores, labels);
}

Stat summarize_values(std::span<const double> values) {
  Stat s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  s.mean = mean;
  if (values.size() == 1) {
    s.std = 0.0;
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  s.std = std::sqrt(ss / (n - 1.0));
  return s;
}

Summary summarize(std::span<const MetricsRow> folds) {
  std::vector<double> acc, auc_v, prec, rec;
  for (const auto& f : folds) {
    acc.push_back(f.accuracy);
    if (f.auc) auc_v.push_back(*f.auc);
    if (f.precision) prec.push_back(*f.precision);
    if (f.recall) rec.push_back(*f.recall);
  }
  return {summarize_values(acc), summarize_values(auc_v), summarize_values(prec), summarize_values(rec)};
}

}  // namespace ncv::evaluate
