#include "ncv/report.hpp"

#include <cstdio>
#include <fstream>

#include "ncv/errors.hpp"

namespace ncv::report {

using evaluate::AggregationRule;
using nlohmann::json;
using selection::FoldOutcome;
using selection::NcvResult;

evaluate::MetricsRow fold_metrics(const FoldOutcome& fold, AggregationRule rule) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& p : fold.patients) {
    scores.push_back(evaluate::aggregate(p.window_probs, rule));
    labels.push_back(p.label);
  }
  if (scores.empty()) return {};
  return evaluate::compute_metrics(scores, labels);
}

evaluate::MetricsRow window_metrics(const FoldOutcome& fold) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& p : fold.patients)
    for (double s : p.window_probs) {
      scores.push_back(s);
      labels.push_back(p.label);
    }
  if (scores.empty()) return {};
  return evaluate::compute_metrics(scores, labels);
}

namespace {

void append_block(std::vector<ReportRow>& rows, const std::string& paradigm, const selection::ConfigOutcome& co,
                  const std::string& rule, const std::vector<evaluate::MetricsRow>& metrics,
                  const std::vector<std::size_t>& n_patients) {
  for (std::size_t f = 0; f < metrics.size(); ++f) {
    const auto& m = metrics[f];
    rows.push_back({paradigm, co.m, rule, std::to_string(co.folds[f].fold),
                    n_patients[f] ? std::optional<double>(m.accuracy) : std::nullopt, m.auc, m.precision, m.recall,
                    n_patients[f]});
  }
  std::vector<evaluate::MetricsRow> scored;
  for (std::size_t f = 0; f < metrics.size(); ++f)
    if (n_patients[f]) scored.push_back(metrics[f]);
  if (metrics.empty()) return;
  const auto s = evaluate::summarize(scored);
  rows.push_back({paradigm, co.m, rule, "mean", s.accuracy.mean, s.auc.mean, s.precision.mean, s.recall.mean, {}});
  rows.push_back({paradigm, co.m, rule, "std", s.accuracy.std, s.auc.std, s.precision.std, s.recall.std, {}});
}

}  // namespace

std::vector<ReportRow> report_rows(const NcvResult& result, std::span<const AggregationRule> rules,
                                   bool window_rows) {
  std::vector<ReportRow> rows;
  const std::string paradigm = selection::to_string(result.paradigm);
  for (const auto& co : result.configs) {
    std::vector<std::size_t> n_patients;
    for (const auto& f : co.folds) n_patients.push_back(f.patients.size());
    for (AggregationRule rule : rules) {
      std::vector<evaluate::MetricsRow> metrics;
      for (const auto& f : co.folds) metrics.push_back(fold_metrics(f, rule));
      append_block(rows, paradigm, co, evaluate::to_string(rule), metrics, n_patients);
    }
    if (window_rows) {
      std::vector<evaluate::MetricsRow> metrics;
      for (const auto& f : co.folds) metrics.push_back(window_metrics(f));
      append_block(rows, paradigm, co, "window", metrics, n_patients);
    }
  }
  return rows;
}

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

std::string to_csv(std::span<const ReportRow> rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += r.paradigm + "," + std::to_string(r.m) + "," + r.rule + "," + r.fold + "," + fmt(r.acc) + "," +
           fmt(r.auc) + "," + fmt(r.prec) + "," + fmt(r.rec) + "," +
           (r.n_test_patients ? std::to_string(*r.n_test_patients) : std::string("NA")) + "\n";
  }
  return out;
}

namespace {

json labels_of(const NcvResult& result, const std::vector<std::size_t>& channels) {
  json out = json::array();
  for (std::size_t c : channels)
    out.push_back(c < result.channel_labels.size() ? result.channel_labels[c] : std::to_string(c));
  return out;
}

}  // namespace

json report_json(const NcvResult& result, const json& config) {
  std::size_t subject = 0, temporal = 0;
  json configs = json::array();
  for (const auto& co : result.configs) {
    json folds = json::array();
    for (const auto& f : co.folds) {
      subject += f.audit.subject_leaks.size();
      temporal += f.audit.temporal_leaks.size();
      folds.push_back({{"fold", f.fold},
                       {"selected_channels", f.selected_channels},
                       {"selected_labels", labels_of(result, f.selected_channels)},
                       {"n_test_patients", f.patients.size()},
                       {"unscored_patients", f.unscored_patients},
                       {"n_train_windows", f.n_train_windows},
                       {"train_origins", f.train_origins},
                       {"test_origins", f.test_origins},
                       {"audit_clean", f.audit.clean()},
                       {"subject_leaks", f.audit.subject_leaks.size()},
                       {"temporal_leaks", f.audit.temporal_leaks.size()}});
    }
    configs.push_back({{"m", co.m},
                       {"modal_subset", co.modal_subset},
                       {"modal_labels", labels_of(result, co.modal_subset)},
                       {"folds", folds}});
  }

  std::string status;
  if (result.leakage_intentional)
    status = "intentional-baseline";
  else
    status = subject + temporal == 0 ? "clean" : "violation";

  json scores = json::object();
  for (const auto& [c, mean] : result.board.mean())
    scores[c < result.channel_labels.size() ? result.channel_labels[c] : std::to_string(c)] = mean;

  return {{"config", config},
          {"seed", result.seed},
          {"paradigm", selection::to_string(result.paradigm)},
          {"backend", result.backend},
          {"outer_k", result.outer_k},
          {"inner_k", result.inner_k},
          {"held_out_origin", result.held_out_origin},
          {"leakage", {{"status", status}, {"subject_leaks", subject}, {"temporal_leaks", temporal}}},
          {"channel_labels", result.channel_labels},
          {"channel_scores", scores},
          {"configs", configs}};
}

namespace {

json board_json(const selection::ChannelScoreBoard& board) {
  json out = json::array();
  for (const auto& [c, v] : board.scores) out.push_back({{"channel", c}, {"scores", v}});
  return out;
}

selection::ChannelScoreBoard board_from_json(const json& j) {
  selection::ChannelScoreBoard board;
  for (const auto& e : j) board.scores[e.at("channel").get<std::size_t>()] = e.at("scores").get<std::vector<double>>();
  return board;
}

}  // namespace

json to_json(const NcvResult& result) {
  json boards = json::array();
  for (const auto& b : result.fold_boards) boards.push_back(board_json(b));
  json configs = json::array();
  for (const auto& co : result.configs) {
    json folds = json::array();
    for (const auto& f : co.folds) {
      json patients = json::array();
      for (const auto& p : f.patients)
        patients.push_back({{"patient_id", p.patient_id},
                            {"label", p.label},
                            {"origin_tag", p.origin_tag},
                            {"window_probs", p.window_probs}});
      folds.push_back({{"fold", f.fold},
                       {"selected_channels", f.selected_channels},
                       {"patients", patients},
                       {"unscored_patients", f.unscored_patients},
                       {"train_origins", f.train_origins},
                       {"test_origins", f.test_origins},
                       {"n_train_windows", f.n_train_windows},
                       {"audit", folds::to_json(f.audit)}});
    }
    configs.push_back({{"m", co.m}, {"modal_subset", co.modal_subset}, {"folds", folds}});
  }
  return {{"format", "ncv-predictions-1"},
          {"paradigm", selection::to_string(result.paradigm)},
          {"backend", result.backend},
          {"seed", result.seed},
          {"outer_k", result.outer_k},
          {"inner_k", result.inner_k},
          {"held_out_origin", result.held_out_origin},
          {"leakage_intentional", result.leakage_intentional},
          {"channel_labels", result.channel_labels},
          {"fold_boards", boards},
          {"board", board_json(result.board)},
          {"configs", configs}};
}

NcvResult ncv_result_from_json(const json& j) {
  try {
    if (j.at("format") != "ncv-predictions-1") throw DataError("unsupported prediction cache format");
    NcvResult r;
    r.paradigm = selection::paradigm_from_string(j.at("paradigm").get<std::string>());
    r.backend = j.at("backend").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.outer_k = j.at("outer_k").get<std::size_t>();
    r.inner_k = j.at("inner_k").get<std::size_t>();
    r.held_out_origin = j.at("held_out_origin").get<std::string>();
    r.leakage_intentional = j.at("leakage_intentional").get<bool>();
    r.channel_labels = j.at("channel_labels").get<std::vector<std::string>>();
    for (const auto& b : j.at("fold_boards")) r.fold_boards.push_back(board_from_json(b));
    r.board = board_from_json(j.at("board"));
    for (const auto& cj : j.at("configs")) {
      selection::ConfigOutcome co;
      co.m = cj.at("m").get<std::size_t>();
      co.modal_subset = cj.at("modal_subset").get<std::vector<std::size_t>>();
      for (const auto& fj : cj.at("folds")) {
        FoldOutcome f;
        f.fold = fj.at("fold").get<std::size_t>();
        f.selected_channels = fj.at("selected_channels").get<std::vector<std::size_t>>();
        for (const auto& pj : fj.at("patients"))
          f.patients.push_back({pj.at("patient_id").get<std::string>(), pj.at("label").get<int>(),
                                pj.at("origin_tag").get<std::string>(),
                                pj.at("window_probs").get<std::vector<double>>()});
        f.unscored_patients = fj.at("unscored_patients").get<std::vector<std::string>>();
        f.train_origins = fj.at("train_origins").get<std::vector<std::string>>();
        f.test_origins = fj.at("test_origins").get<std::vector<std::string>>();
        f.n_train_windows = fj.at("n_train_windows").get<std::size_t>();
        f.audit = folds::audit_report_from_json(fj.at("audit"));
        co.folds.push_back(std::move(f));
      }
      r.configs.push_back(std::move(co));
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed prediction cache: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed prediction cache: ") + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw DataError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void emit_report(const NcvResult& result, std::span<const AggregationRule> rules, const json& config,
                 const std::filesystem::path& dir) {
  const auto rows = report_rows(result, rules, true);
  write_file(dir / "report.csv", to_csv(rows));
  write_file(dir / "report.json", report_json(result, config).dump(2) + "\n");
}

void emit_ablation(const NcvResult& result, const std::filesystem::path& dir) {
  const auto rows = report_rows(result, evaluate::kAllRules, false);
  write_file(dir / "ablation.csv", to_csv(rows));
}

}  // namespace ncv::report
