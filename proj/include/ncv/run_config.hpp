#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncv/evaluate.hpp"
#include "ncv/model.hpp"
#include "ncv/selection.hpp"
#include "ncv/spectro.hpp"

namespace ncv {

/// Everything a run needs. Paths are absolute after loading; the `*_raw`
/// fields keep the strings as written so reports do not depend on where the
/// config file lives.
struct RunConfig {
  std::vector<std::filesystem::path> datasets;
  std::vector<std::string> datasets_raw;
  std::optional<std::filesystem::path> template_path;  // empty: bundled 64-channel template
  std::string template_raw;
  selection::Paradigm paradigm = selection::Paradigm::Stratified;
  selection::NcvConfig ncv;
  std::vector<evaluate::AggregationRule> rules{evaluate::AggregationRule::Mean};
  std::filesystem::path output_dir = "out";
  spectro::WindowingConfig windowing;
  model::PoolConfig pool;
  model::TrainConfig train;
  std::optional<std::filesystem::path> cache_dir;
};

/// Throws ConfigError naming the first offending field.
void validate(const RunConfig& cfg);

/// Unknown keys are rejected. Relative paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// The reproducibility-relevant part: no worker count, cache or output dir.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace ncv
