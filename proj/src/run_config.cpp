#include "ncv/run_config.hpp"

#include <fstream>
#include <set>

#include "ncv/errors.hpp"

namespace ncv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + key + "' has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& raw) {
  const fs::path p(raw);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

spectro::WindowFunction window_from_string(const std::string& s) {
  if (s == "hann") return spectro::WindowFunction::Hann;
  if (s == "hamming") return spectro::WindowFunction::Hamming;
  if (s == "rectangular") return spectro::WindowFunction::Rectangular;
  throw ConfigError("windowing.window must be hann, hamming or rectangular (got '" + s + "')");
}

std::string to_string(spectro::WindowFunction w) {
  switch (w) {
    case spectro::WindowFunction::Hann:
      return "hann";
    case spectro::WindowFunction::Hamming:
      return "hamming";
    case spectro::WindowFunction::Rectangular:
      return "rectangular";
  }
  return "?";
}

}  // namespace

void validate(const RunConfig& cfg) {
  if (cfg.datasets.empty()) throw ConfigError("dataset: at least one manifest path is required");
  if (cfg.ncv.outer_k < 2) throw ConfigError("outer_k must be >= 2");
  if (cfg.ncv.inner_k < 2) throw ConfigError("inner_k must be >= 2");
  if (cfg.ncv.m_values.empty()) throw ConfigError("m_values must not be empty");
  for (std::size_t m : cfg.ncv.m_values)
    if (m == 0) throw ConfigError("m_values entries must be >= 1");
  if (cfg.rules.empty()) throw ConfigError("aggregation_rules must not be empty");
  if (cfg.train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(cfg.train.base_lr > 0.0)) throw ConfigError("train.base_lr must be > 0");
  if (!(cfg.train.lr_decay > 0.0 && cfg.train.lr_decay <= 1.0)) throw ConfigError("train.lr_decay must be in (0, 1]");
  if (cfg.pool.out_freq_bins == 0 || cfg.pool.out_time_bins == 0) throw ConfigError("pool sizes must be >= 1");
  if (cfg.pool.out_freq_bins > cfg.windowing.freq_bins() || cfg.pool.out_time_bins > cfg.windowing.time_bins())
    throw ConfigError("pool grid is larger than the spectrogram");
  spectro::validate(cfg.windowing);
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  reject_unknown(j,
                 {"dataset", "template", "paradigm", "block_origin", "outer_k", "inner_k", "m_values", "seed",
                  "aggregation_rules", "output_dir", "workers", "windowing", "pool", "train"},
                 "run config");
  RunConfig cfg;
  if (!j.contains("dataset")) throw ConfigError("run config is missing 'dataset'");
  const json& ds = j.at("dataset");
  if (ds.is_string()) {
    cfg.datasets_raw.push_back(ds.get<std::string>());
  } else if (ds.is_array()) {
    for (const auto& d : ds) {
      if (!d.is_string()) throw ConfigError("dataset entries must be strings");
      cfg.datasets_raw.push_back(d.get<std::string>());
    }
  } else {
    throw ConfigError("dataset must be a path or a list of paths");
  }
  for (const auto& raw : cfg.datasets_raw) cfg.datasets.push_back(resolve(base_dir, raw));

  if (j.contains("template")) {
    cfg.template_raw = get<std::string>(j, "template", "");
    cfg.template_path = resolve(base_dir, cfg.template_raw);
  }
  if (j.contains("paradigm")) cfg.paradigm = selection::paradigm_from_string(get<std::string>(j, "paradigm", ""));
  if (j.contains("block_origin")) cfg.ncv.block_origin = get<std::string>(j, "block_origin", "");
  if (j.contains("outer_k")) cfg.ncv.outer_k = get<std::size_t>(j, "outer_k", "");
  if (j.contains("inner_k")) cfg.ncv.inner_k = get<std::size_t>(j, "inner_k", "");
  if (j.contains("m_values")) cfg.ncv.m_values = get<std::vector<std::size_t>>(j, "m_values", "");
  if (j.contains("seed")) cfg.ncv.seed = get<std::uint64_t>(j, "seed", "");
  if (j.contains("workers")) cfg.ncv.workers = get<unsigned>(j, "workers", "");
  if (j.contains("aggregation_rules")) {
    cfg.rules.clear();
    for (const auto& name : get<std::vector<std::string>>(j, "aggregation_rules", ""))
      cfg.rules.push_back(evaluate::rule_from_string(name));
  }
  if (j.contains("output_dir")) cfg.output_dir = resolve(base_dir, get<std::string>(j, "output_dir", ""));

  if (j.contains("windowing")) {
    const json& w = j.at("windowing");
    reject_unknown(w, {"outer_len", "outer_hop", "n_fft", "stft_hop", "db_floor_eps", "window"}, "windowing");
    if (w.contains("outer_len")) cfg.windowing.outer_len = get<std::size_t>(w, "outer_len", "windowing.");
    if (w.contains("outer_hop")) cfg.windowing.outer_hop = get<std::size_t>(w, "outer_hop", "windowing.");
    if (w.contains("n_fft")) cfg.windowing.n_fft = get<std::size_t>(w, "n_fft", "windowing.");
    if (w.contains("stft_hop")) cfg.windowing.stft_hop = get<std::size_t>(w, "stft_hop", "windowing.");
    if (w.contains("db_floor_eps")) cfg.windowing.db_floor_eps = get<double>(w, "db_floor_eps", "windowing.");
    if (w.contains("window")) cfg.windowing.window = window_from_string(get<std::string>(w, "window", "windowing."));
  }
  if (j.contains("pool")) {
    const json& p = j.at("pool");
    reject_unknown(p, {"freq_bins", "time_bins"}, "pool");
    if (p.contains("freq_bins")) cfg.pool.out_freq_bins = get<std::size_t>(p, "freq_bins", "pool.");
    if (p.contains("time_bins")) cfg.pool.out_time_bins = get<std::size_t>(p, "time_bins", "pool.");
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t, {"epochs", "base_lr", "lr_decay"}, "train");
    if (t.contains("epochs")) cfg.train.epochs = get<int>(t, "epochs", "train.");
    if (t.contains("base_lr")) cfg.train.base_lr = get<double>(t, "base_lr", "train.");
    if (t.contains("lr_decay")) cfg.train.lr_decay = get<double>(t, "lr_decay", "train.");
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("run config " + path.string() + " is not valid JSON: " + e.what());
  }
  const fs::path base = fs::absolute(path).parent_path();
  RunConfig cfg = run_config_from_json(j, base);
  if (!j.contains("output_dir")) cfg.output_dir = base / "out";
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json rules = json::array();
  for (auto r : cfg.rules) rules.push_back(evaluate::to_string(r));
  return {{"dataset", cfg.datasets_raw},
          {"template", cfg.template_raw.empty() ? json(nullptr) : json(cfg.template_raw)},
          {"paradigm", selection::to_string(cfg.paradigm)},
          {"block_origin", cfg.ncv.block_origin},
          {"outer_k", cfg.ncv.outer_k},
          {"inner_k", cfg.ncv.inner_k},
          {"m_values", cfg.ncv.m_values},
          {"seed", cfg.ncv.seed},
          {"aggregation_rules", rules},
          {"windowing",
           {{"outer_len", cfg.windowing.outer_len},
            {"outer_hop", cfg.windowing.outer_hop},
            {"n_fft", cfg.windowing.n_fft},
            {"stft_hop", cfg.windowing.stft_hop},
            {"db_floor_eps", cfg.windowing.db_floor_eps},
            {"window", to_string(cfg.windowing.window)}}},
          {"pool", {{"freq_bins", cfg.pool.out_freq_bins}, {"time_bins", cfg.pool.out_time_bins}}},
          {"train", {{"epochs", cfg.train.epochs}, {"base_lr", cfg.train.base_lr}, {"lr_decay", cfg.train.lr_decay}}}};
}

}  // namespace ncv
