#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ncv/folds.hpp"
#include "ncv/model.hpp"
#include "ncv/spectro.hpp"

namespace ncv::selection {

/// Inner-fold accuracies per channel. Channels only receive an entry for
/// folds in which they had active validation windows.
struct ChannelScoreBoard {
  std::map<std::size_t, std::vector<double>> scores;

  void add(const std::map<std::size_t, double>& fold_accuracy);
  /// Arithmetic mean of each channel's fold accuracies.
  std::map<std::size_t, double> mean() const;
  bool empty() const { return scores.empty(); }
};

/// Fraction of each channel's active windows whose thresholded probability
/// matches the label. Channels without active windows are absent.
std::map<std::size_t, double> score_channels(const model::WindowClassifier& model,
                                             std::span<const spectro::SpectrogramWindow* const> val_windows);

/// The m best channels by mean score (ties: lower index), returned in
/// ascending index order. Throws ConfigError on an empty board or m == 0.
std::vector<std::size_t> select_top_m(const ChannelScoreBoard& board, std::size_t m);

enum class Paradigm { Stratified, NoStratification, PopulationBlock };

std::string to_string(Paradigm p);
/// Accepts "stratified", "no-stratification"/"no_stratification",
/// "population-block"/"population_block".
Paradigm paradigm_from_string(const std::string& s);

struct NcvConfig {
  std::size_t outer_k = 5;
  std::size_t inner_k = 3;
  std::vector<std::size_t> m_values{1, 2, 4, 8, 16};
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string block_origin;  // population blocking; empty = first origin in sorted order
};

struct PatientPrediction {
  std::string patient_id;
  int label = 0;
  std::string origin_tag;
  std::vector<double> window_probs;
};

struct FoldOutcome {
  std::size_t fold = 0;
  std::vector<std::size_t> selected_channels;
  std::vector<PatientPrediction> patients;     // outer-test patients with at least one scored window
  std::vector<std::string> unscored_patients;  // outer-test patients with no active selected channel
  std::vector<std::string> train_origins;
  std::vector<std::string> test_origins;
  std::size_t n_train_windows = 0;
  folds::AuditReport audit;  // outer train vs outer test
};

struct ConfigOutcome {
  std::size_t m = 0;
  std::vector<FoldOutcome> folds;
  std::vector<std::size_t> modal_subset;  // most frequent selection; ties: earliest fold
};

struct NcvResult {
  Paradigm paradigm = Paradigm::Stratified;
  std::string backend;
  std::uint64_t seed = 0;
  std::size_t outer_k = 0;
  std::size_t inner_k = 0;
  std::string held_out_origin;
  bool leakage_intentional = false;
  std::vector<std::string> channel_labels;
  std::vector<ChannelScoreBoard> fold_boards;  // the board each outer fold selected from
  ChannelScoreBoard board;                     // all folds, for reporting only
  std::vector<ConfigOutcome> configs;          // one per requested m
};

/// Nested cross-validation with inner-loop channel selection. Per outer
/// fold: score channels with a model trained on each inner-train split,
/// average per channel, keep the top m, retrain on the outer-train windows of
/// those channels and predict the outer-test windows. The outer-test
/// patients never reach the inner loop; every split is audited and a leak
/// throws LeakageError.
NcvResult run_nested_cv(const std::vector<spectro::SpectrogramWindow>& windows,
                        const std::vector<std::string>& channel_labels, const model::ClassifierBackend& backend,
                        const NcvConfig& cfg);

/// Baselines through the same model and metrics path: window-level k-fold on
/// all active channels (leaky on purpose) or a single held-out population
/// with inner-loop selection on the remaining sites.
NcvResult run_baseline(const std::vector<spectro::SpectrogramWindow>& windows,
                       const std::vector<std::string>& channel_labels, const model::ClassifierBackend& backend,
                       Paradigm mode, const NcvConfig& cfg);

std::vector<folds::PatientInfo> patient_infos(const std::vector<spectro::SpectrogramWindow>& windows);
folds::WindowRef window_ref(const spectro::SpectrogramWindow& w);

}  // namespace ncv::selection
