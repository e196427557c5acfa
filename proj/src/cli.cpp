#include "ncv/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "ncv/channel_template.hpp"
#include "ncv/errors.hpp"
#include "ncv/folds.hpp"
#include "ncv/model.hpp"
#include "ncv/preprocess.hpp"
#include "ncv/report.hpp"

namespace ncv::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void log(const std::string& msg) { std::cerr << "[ncv] " << msg << "\n"; }

std::optional<fs::path> cache_dir_from_env() {
  const char* v = std::getenv("NCV_CACHE_DIR");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return fs::path(v);
}

/// Same order and provenance as extract_all, without computing spectra.
std::vector<spectro::SpectrogramWindow> provenance_windows(const std::vector<preprocess::HarmonizedRecording>& recs,
                                                           const spectro::WindowingConfig& wc) {
  std::vector<std::size_t> order(recs.size());
  std::map<std::string, std::size_t> first_seen;
  for (std::size_t i = 0; i < recs.size(); ++i) first_seen.try_emplace(recs[i].patient_id, i);
  for (std::size_t i = 0; i < recs.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return first_seen[recs[a].patient_id] < first_seen[recs[b].patient_id];
  });
  std::vector<spectro::SpectrogramWindow> out;
  for (std::size_t i : order) {
    const auto& r = recs[i];
    const auto starts = spectro::segment_starts(r.n_samples(), wc);
    for (std::size_t w = 0; w < starts.size(); ++w)
      for (std::size_t c = 0; c < r.n_channels(); ++c) {
        spectro::SpectrogramWindow win;
        win.patient_id = r.patient_id;
        win.session_id = r.session_id;
        win.origin_tag = r.origin_tag;
        win.diagnosis = r.diagnosis;
        win.channel_index = c;
        win.window_index = w;
        win.sample_start = starts[w];
        win.sample_len = wc.outer_len;
        win.active = r.active_mask[c];
        out.push_back(std::move(win));
      }
  }
  return out;
}

json cache_config(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("aggregation_rules");
  return j;
}

selection::NcvResult load_prediction_cache(const RunConfig& cfg) {
  const fs::path path = cfg.output_dir / "predictions.json";
  std::ifstream in(path);
  if (!in) throw DataError("no prediction cache at " + path.string() + "; run `ncv run` with this config first");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("prediction cache " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.contains("config") || j.at("config") != cache_config(cfg))
    throw DataError("prediction cache " + path.string() +
                    " was produced by a different configuration; run `ncv run` with this config first");
  return report::ncv_result_from_json(j.at("result"));
}

}  // namespace

PreparedData prepare(const RunConfig& cfg, bool with_spectrograms) {
  const auto tmpl = cfg.template_path ? preprocess::load_template(*cfg.template_path) : preprocess::default_template();
  const auto recs = dataset::load_datasets(cfg.datasets);
  if (recs.empty()) throw DataError("the configured datasets contain no recordings");
  log("loaded " + std::to_string(recs.size()) + " recordings; harmonizing to " + std::to_string(tmpl.size()) +
      " channels");
  const auto harmonized = preprocess::harmonize_all(recs, tmpl, cfg.ncv.workers);
  PreparedData data;
  data.channel_labels = tmpl.labels();
  if (with_spectrograms) {
    const auto cache = cfg.cache_dir ? cfg.cache_dir : cache_dir_from_env();
    data.windows = spectro::extract_all(harmonized, cfg.windowing, cfg.ncv.workers, cache);
  } else {
    data.windows = provenance_windows(harmonized, cfg.windowing);
  }
  return data;
}

selection::NcvResult execute(const RunConfig& cfg, const PreparedData& data) {
  const model::BandPooledLogistic backend(cfg.train, cfg.pool);
  if (cfg.paradigm == selection::Paradigm::Stratified)
    return selection::run_nested_cv(data.windows, data.channel_labels, backend, cfg.ncv);
  return selection::run_baseline(data.windows, data.channel_labels, backend, cfg.paradigm, cfg.ncv);
}

void cmd_synth(const dataset::SynthSpec& spec, const fs::path& out_dir, unsigned workers) {
  dataset::validate(spec);
  const auto synth = dataset::generate_synthetic(spec, workers);
  const std::string origin = spec.sites.size() == 1 ? spec.sites.front() : "synthetic";
  dataset::write_dataset(synth.recordings, out_dir, "synthetic", origin);
  report::write_file(out_dir / "ground_truth.json", dataset::to_json(synth.truth).dump(2) + "\n");
  report::write_file(out_dir / "synth_spec.json", dataset::to_json(spec).dump(2) + "\n");
  preprocess::write_template(preprocess::ChannelTemplate::from_labels(spec.channels), out_dir / "template.csv");
  const json run = {{"dataset", "manifest.json"},
                    {"template", "template.csv"},
                    {"paradigm", "stratified"},
                    {"outer_k", 5},
                    {"inner_k", 3},
                    {"m_values", {1, 2, 4, 8}},
                    {"seed", spec.seed},
                    {"aggregation_rules", {"mean"}},
                    {"output_dir", "results"}};
  report::write_file(out_dir / "run.json", run.dump(2) + "\n");
  log("wrote " + std::to_string(synth.recordings.size()) + " recordings to " + out_dir.string());
}

selection::NcvResult cmd_run(const RunConfig& cfg) {
  validate(cfg);
  const auto data = prepare(cfg);
  log("running " + selection::to_string(cfg.paradigm) + " on " + std::to_string(data.windows.size()) +
      " spectrogram windows");
  auto result = execute(cfg, data);
  report::emit_report(result, cfg.rules, to_json(cfg), cfg.output_dir);
  const json cache = {{"config", cache_config(cfg)}, {"result", report::to_json(result)}};
  report::write_file(cfg.output_dir / "predictions.json", cache.dump() + "\n");
  log("report written to " + cfg.output_dir.string());
  return result;
}

void cmd_ablate(const RunConfig& cfg) {
  validate(cfg);
  const auto result = load_prediction_cache(cfg);
  report::emit_ablation(result, cfg.output_dir);
  log("ablation written to " + (cfg.output_dir / "ablation.csv").string());
}

void cmd_report(const RunConfig& cfg) {
  validate(cfg);
  const auto result = load_prediction_cache(cfg);
  report::emit_report(result, cfg.rules, to_json(cfg), cfg.output_dir);
}

json cmd_audit(const RunConfig& cfg) {
  validate(cfg);
  const auto data = prepare(cfg, false);
  std::vector<folds::WindowRef> all;
  for (const auto& w : data.windows)
    if (w.active) all.push_back(selection::window_ref(w));

  auto refs_of = [&](const std::vector<std::string>& ids) {
    const std::set<std::string> keep(ids.begin(), ids.end());
    std::vector<folds::WindowRef> out;
    for (const auto& r : all)
      if (keep.contains(r.patient_id)) out.push_back(r);
    return out;
  };

  json splits = json::array();
  bool grouped_leak = false;
  auto record = [&](const std::string& name, const folds::AuditReport& rep, bool grouped) {
    if (grouped && !rep.clean()) grouped_leak = true;
    json entry = folds::to_json(rep);
    entry["split"] = name;
    splits.push_back(std::move(entry));
  };

  json plan_json;
  if (cfg.paradigm == selection::Paradigm::NoStratification) {
    const auto plan = folds::plan_window_folds(all, cfg.ncv.outer_k, cfg.ncv.seed);
    plan_json = folds::to_json(plan);
    for (std::size_t f = 0; f < cfg.ncv.outer_k; ++f) {
      std::vector<folds::WindowRef> tr, te;
      for (std::size_t i = 0; i < all.size(); ++i) (plan.window_assignments[i] == f ? te : tr).push_back(all[i]);
      record("outer " + std::to_string(f), folds::audit_leakage(tr, te), false);
    }
  } else {
    const auto patients = selection::patient_infos(data.windows);
    folds::FoldPlan plan;
    if (cfg.paradigm == selection::Paradigm::Stratified) {
      plan = folds::plan_folds(patients, cfg.ncv.outer_k, cfg.ncv.seed);
    } else {
      std::string origin = cfg.ncv.block_origin;
      if (origin.empty()) {
        std::set<std::string> tags;
        for (const auto& p : patients) tags.insert(p.origin_tag);
        origin = *tags.begin();
      }
      plan = folds::plan_population_block(patients, origin);
    }
    plan_json = folds::to_json(plan);
    for (std::size_t f = 0; f < plan.n_outer_folds(); ++f) {
      const auto split = folds::nested_split(plan, f, cfg.ncv.inner_k, cfg.ncv.seed);
      const auto test = refs_of(split.outer_test);
      const std::string outer = "outer " + std::to_string(f);
      record(outer, folds::audit_leakage(refs_of(split.outer_train), test), true);
      for (std::size_t k = 0; k < split.inner.size(); ++k) {
        const auto tr = refs_of(split.inner[k].train);
        const auto va = refs_of(split.inner[k].test);
        const std::string inner = outer + " inner " + std::to_string(k);
        record(inner + " train/validation", folds::audit_leakage(tr, va), true);
        record(inner + " train/outer-test", folds::audit_leakage(tr, test), true);
        record(inner + " validation/outer-test", folds::audit_leakage(va, test), true);
      }
    }
  }

  const json out = {{"paradigm", selection::to_string(cfg.paradigm)},
                    {"leakage_intentional", cfg.paradigm == selection::Paradigm::NoStratification},
                    {"plan", plan_json},
                    {"splits", splits}};
  report::write_file(cfg.output_dir / "audit.json", out.dump(2) + "\n");
  std::size_t dirty = 0;
  for (const auto& s : splits) dirty += s.at("clean").get<bool>() ? 0 : 1;
  log("audited " + std::to_string(splits.size()) + " splits, " + std::to_string(dirty) + " with leakage");
  if (grouped_leak) throw LeakageError("patient-grouped split leaks; see " + (cfg.output_dir / "audit.json").string());
  return out;
}

namespace {

struct Overrides {
  std::optional<std::string> paradigm;
  std::vector<std::size_t> m_values;
  std::vector<std::string> rules;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> outer_k, inner_k;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--paradigm", o.paradigm, "stratified | no-stratification | population-block");
  cmd->add_option("--m", o.m_values, "channel subset sizes (comma separated)")->delimiter(',');
  cmd->add_option("--agg", o.rules, "aggregation rules (comma separated)")->delimiter(',');
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--outer-k", o.outer_k, "outer folds");
  cmd->add_option("--inner-k", o.inner_k, "inner folds");
  cmd->add_option("--workers", o.workers, "worker threads (0 = all cores)");
  cmd->add_option("--out", o.out, "output directory");
}

RunConfig load_with_overrides(const std::string& path, const Overrides& o) {
  RunConfig cfg = load_run_config(path);
  if (o.paradigm) cfg.paradigm = selection::paradigm_from_string(*o.paradigm);
  if (!o.m_values.empty()) cfg.ncv.m_values = o.m_values;
  if (!o.rules.empty()) {
    cfg.rules.clear();
    for (const auto& r : o.rules) cfg.rules.push_back(evaluate::rule_from_string(r));
  }
  if (o.seed) cfg.ncv.seed = *o.seed;
  if (o.outer_k) cfg.ncv.outer_k = *o.outer_k;
  if (o.inner_k) cfg.ncv.inner_k = *o.inner_k;
  if (o.workers) cfg.ncv.workers = *o.workers;
  if (o.out) cfg.output_dir = fs::absolute(*o.out);
  return cfg;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Patient-stratified nested cross-validation for EEG channel selection"};
  app.require_subcommand(1);

  std::string spec_path, synth_out;
  std::optional<std::uint64_t> synth_seed;
  unsigned synth_workers = 0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "synthetic spec JSON (defaults when omitted)");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "override the spec seed");
  synth->add_option("--workers", synth_workers, "worker threads (0 = all cores)");

  std::string config_path;
  Overrides overrides;
  std::vector<CLI::App*> pipeline;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"run", "run the configured paradigm and write the report"},
           {"ablate", "aggregation ablation from cached predictions"},
           {"audit", "plan and audit the splits without training"},
           {"report", "re-emit the report from cached predictions"}}) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("config", config_path, "run config JSON")->required();
    add_overrides(cmd, overrides);
    pipeline.push_back(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      dataset::SynthSpec spec = dataset::default_synth_spec();
      if (!spec_path.empty()) {
        std::ifstream in(spec_path);
        if (!in) throw ConfigError("cannot open synth spec " + spec_path);
        json j;
        try {
          in >> j;
        } catch (const json::exception& e) {
          throw ConfigError("synth spec " + spec_path + " is not valid JSON: " + e.what());
        }
        spec = dataset::synth_spec_from_json(j);
      }
      if (synth_seed) spec.seed = *synth_seed;
      cmd_synth(spec, synth_out, synth_workers);
      return 0;
    }
    const RunConfig cfg = load_with_overrides(config_path, overrides);
    if (pipeline[0]->parsed()) cmd_run(cfg);
    if (pipeline[1]->parsed()) cmd_ablate(cfg);
    if (pipeline[2]->parsed()) cmd_audit(cfg);
    if (pipeline[3]->parsed()) cmd_report(cfg);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const LeakageError& e) {
    std::cerr << "leakage violation: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ncv::cli
