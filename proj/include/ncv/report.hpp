#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncv/evaluate.hpp"
#include "ncv/selection.hpp"

namespace ncv::report {

inline constexpr const char* kCsvHeader = "paradigm,m,rule,fold,acc,auc,prec,rec,n_test_patients";

/// One CSV line. `fold` is the fold index, "mean" or "std"; `rule` is an
/// aggregation rule name or "window" for window-level metrics.
struct ReportRow {
  std::string paradigm;
  std::size_t m = 0;
  std::string rule;
  std::string fold;
  std::optional<double> acc, auc, prec, rec;
  std::optional<std::size_t> n_test_patients;
};

/// Patient-level metrics of one fold under one rule.
evaluate::MetricsRow fold_metrics(const selection::FoldOutcome& fold, evaluate::AggregationRule rule);
/// Every window of the fold's test patients scored on its own.
evaluate::MetricsRow window_metrics(const selection::FoldOutcome& fold);

/// Per (m, rule): one row per fold, then "mean" and "std" rows. With
/// `window_rows`, each m also gets a "window" block after the rules.
std::vector<ReportRow> report_rows(const selection::NcvResult& result,
                                   std::span<const evaluate::AggregationRule> rules, bool window_rows);

/// Header plus rows; numbers as %.6f, absent values as NA.
std::string to_csv(std::span<const ReportRow> rows);

/// Sidecar summary: run config, seed, selected channels per fold, modal
/// subsets, leakage-audit status and origins.
nlohmann::json report_json(const selection::NcvResult& result, const nlohmann::json& config);

/// Lossless serialization, used as the prediction cache.
nlohmann::json to_json(const selection::NcvResult& result);
selection::NcvResult ncv_result_from_json(const nlohmann::json& j);

/// Writes `content` to `path` through a temporary file; failures throw
/// DataError naming the path.
void write_file(const std::filesystem::path& path, const std::string& content);

/// report.csv and report.json in `dir`.
void emit_report(const selection::NcvResult& result, std::span<const evaluate::AggregationRule> rules,
                 const nlohmann::json& config, const std::filesystem::path& dir);

/// ablation.csv in `dir`: all six rules, every m and fold.
void emit_ablation(const selection::NcvResult& result, const std::filesystem::path& dir);

}  // namespace ncv::report
