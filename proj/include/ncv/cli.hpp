#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncv/run_config.hpp"
#include "ncv/selection.hpp"
#include "ncv/spectro.hpp"

namespace ncv::cli {

/// Windows of the harmonized datasets plus the template labels they index.
struct PreparedData {
  std::vector<spectro::SpectrogramWindow> windows;
  std::vector<std::string> channel_labels;
};

/// Load, harmonize and window every configured dataset. With
/// `with_spectrograms` false the windows carry provenance only (no values).
PreparedData prepare(const RunConfig& cfg, bool with_spectrograms = true);

/// Runs the configured paradigm on prepared data.
selection::NcvResult execute(const RunConfig& cfg, const PreparedData& data);

/// Synthetic dataset, ground truth, channel template and a starter run
/// config (run.json) under `out_dir`.
void cmd_synth(const dataset::SynthSpec& spec, const std::filesystem::path& out_dir, unsigned workers = 0);

/// report.csv, report.json and the prediction cache predictions.json.
selection::NcvResult cmd_run(const RunConfig& cfg);

/// ablation.csv from the prediction cache; no retraining.
void cmd_ablate(const RunConfig& cfg);

/// Plans the configured splits and audits them without training; writes
/// audit.json. Throws LeakageError if a patient-grouped split leaks.
nlohmann::json cmd_audit(const RunConfig& cfg);

/// Re-emits report.csv/report.json from the prediction cache.
void cmd_report(const RunConfig& cfg);

/// Entry point. Exit codes: 0 ok, 1 unexpected failure, 2 configuration
/// error, 3 data error, 4 leakage violation.
int run_cli(int argc, char** argv);

}  // namespace ncv::cli
