#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ncv::folds {

enum class SplitMode { StratifiedGrouped, WindowLevelUnstratified, PopulationBlock };

std::string to_string(SplitMode mode);

struct PatientInfo {
  std::string patient_id;
  int label = 0;
  std::size_t n_windows = 1;
  std::string origin_tag;
};

/// Provenance of one window, enough to detect subject and temporal overlap.
struct WindowRef {
  std::string patient_id;
  std::string session_id;
  std::size_t sample_start = 0;
  std::size_t sample_len = 0;
};

struct FoldPlan {
  SplitMode mode = SplitMode::StratifiedGrouped;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<PatientInfo> patients;
  /// Grouped modes: patient -> fold. PopulationBlock uses fold 0 for the
  /// held-out origin and fold 1 for everyone else.
  std::map<std::string, std::size_t> assignments;
  /// WindowLevelUnstratified only: fold of each window, by window position.
  std::vector<std::size_t> window_assignments;
  std::string held_out_origin;

  /// Outer folds to iterate (1 for PopulationBlock).
  std::size_t n_outer_folds() const { return mode == SplitMode::PopulationBlock ? 1 : k; }
};

/// Grouped stratified assignment: seeded shuffle, stable sort by (label,
/// descending window count), then each patient goes to the fold with the
/// smallest resulting class-count imbalance (ties: smaller fold, then lower
/// index). Throws ConfigError if k < 2, k > #patients, or one class only.
FoldPlan plan_folds(std::span<const PatientInfo> patients, std::size_t k, std::uint64_t seed);

/// Window-level (leaky) baseline: windows are dealt round-robin to k folds
/// after a seeded shuffle, patient by patient, so any patient with at least
/// two windows lands in at least two folds.
FoldPlan plan_window_folds(std::span<const WindowRef> windows, std::size_t k, std::uint64_t seed);

/// Hold out every patient of one origin tag.
FoldPlan plan_population_block(std::span<const PatientInfo> patients, const std::string& held_out_origin);

struct GroupSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

struct NestedSplit {
  std::vector<std::string> outer_train;
  std::vector<std::string> outer_test;
  std::vector<GroupSplit> inner;  // grouped-stratified folds over outer_train only
};

/// Inner folds are re-planned per outer fold from derive_seed(seed, outer_fold).
NestedSplit nested_split(const FoldPlan& plan, std::size_t outer_fold, std::size_t inner_k, std::uint64_t seed);

struct TemporalLeak {
  std::string patient_id;
  std::string session_id;
  std::size_t train_start = 0;
  std::size_t test_start = 0;
};

struct AuditReport {
  std::vector<std::string> subject_leaks;  // patients present on both sides
  std::vector<TemporalLeak> temporal_leaks;

  bool clean() const { return subject_leaks.empty() && temporal_leaks.empty(); }
};

AuditReport audit_leakage(std::span<const WindowRef> train, std::span<const WindowRef> test);

/// Patient-level audit of two id sets (a window per patient, same span).
AuditReport audit_patients(std::span<const std::string> train, std::span<const std::string> test);

nlohmann::json to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AuditReport& report);
AuditReport audit_report_from_json(const nlohmann::json& j);

}  // namespace ncv::folds
