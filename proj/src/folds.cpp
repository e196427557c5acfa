#include "ncv/folds.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>
#include <tuple>

#include "ncv/errors.hpp"
#include "ncv/rng.hpp"

namespace ncv::folds {
using nlohmann::json;

std::string to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::StratifiedGrouped:
      return "stratified_grouped";
    case SplitMode::WindowLevelUnstratified:
      return "window_level_unstratified";
    case SplitMode::PopulationBlock:
      return "population_block";
  }
  return "?";
}

namespace {

SplitMode mode_from_string(const std::string& s) {
  if (s == "stratified_grouped") return SplitMode::StratifiedGrouped;
  if (s == "window_level_unstratified") return SplitMode::WindowLevelUnstratified;
  if (s == "population_block") return SplitMode::PopulationBlock;
  throw ConfigError("unknown fold plan mode '" + s + "'");
}

}  // namespace

FoldPlan plan_folds(std::span<const PatientInfo> patients, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("fold count k must be >= 2");
  if (k > patients.size())
    throw ConfigError("fold count k=" + std::to_string(k) + " exceeds patient count " +
                      std::to_string(patients.size()));
  std::set<std::string> ids;
  std::set<int> labels;
  for (const auto& p : patients) {
    if (!ids.insert(p.patient_id).second) throw ConfigError("patient '" + p.patient_id + "' listed twice");
    if (p.label != 0 && p.label != 1) throw ConfigError("patient labels must be binary");
    labels.insert(p.label);
  }
  if (labels.size() < 2) throw ConfigError("grouped stratified folds need both classes present");

  std::vector<PatientInfo> order(patients.begin(), patients.end());
  Rng rng(seed);
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(), [](const PatientInfo& a, const PatientInfo& b) {
    if (a.label != b.label) return a.label < b.label;
    return a.n_windows > b.n_windows;
  });

  std::size_t class_total[2] = {0, 0};
  for (const auto& p : patients) ++class_total[p.label];
  std::vector<std::array<std::size_t, 2>> counts(k, {0, 0});
  std::vector<std::size_t> sizes(k, 0);
  const double kd = static_cast<double>(k);
  const double size_target = static_cast<double>(patients.size()) / kd;

  FoldPlan plan;
  plan.mode = SplitMode::StratifiedGrouped;
  plan.k = k;
  plan.seed = seed;
  plan.patients.assign(patients.begin(), patients.end());

  for (const auto& p : order) {
    const int c = p.label;
    const double target = static_cast<double>(class_total[c]) / kd;
    std::size_t best = 0;
    std::tuple<double, double> best_score{0.0, 0.0};
    for (std::size_t f = 0; f < k; ++f) {
      // Only fold f changes, so comparing its own post-assignment deviation
      // ranks the candidates the same as the total squared imbalance.
      const double dc = static_cast<double>(counts[f][c] + 1) - target;
      const double ds = static_cast<double>(sizes[f] + 1) - size_target;
      const double before_c = static_cast<double>(counts[f][c]) - target;
      const double before_s = static_cast<double>(sizes[f]) - size_target;
      const std::tuple<double, double> score{dc * dc - before_c * before_c, ds * ds - before_s * before_s};
      if (f == 0 || score < best_score) {
        best = f;
        best_score = score;
      }
    }
    ++counts[best][c];
    ++sizes[best];
    plan.assignments[p.patient_id] = best;
  }
  return plan;
}

FoldPlan plan_window_folds(std::span<const WindowRef> windows, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("fold count k must be >= 2");
  if (k > windows.size()) throw ConfigError("fold count exceeds window count");
  std::map<std::string, std::vector<std::size_t>> by_patient;
  for (std::size_t i = 0; i < windows.size(); ++i) by_patient[windows[i].patient_id].push_back(i);

  Rng rng(seed);
  std::vector<std::string> patient_order;
  for (const auto& [id, _] : by_patient) patient_order.push_back(id);
  rng.shuffle(patient_order);

  FoldPlan plan;
  plan.mode = SplitMode::WindowLevelUnstratified;
  plan.k = k;
  plan.seed = seed;
  plan.window_assignments.assign(windows.size(), 0);
  std::size_t dealt = 0;
  for (const auto& id : patient_order) {
    auto idx = by_patient[id];
    rng.shuffle(idx);
    for (std::size_t i : idx) plan.window_assignments[i] = dealt++ % k;
  }
  return plan;
}

FoldPlan plan_population_block(std::span<const PatientInfo> patients, const std::string& held_out_origin) {
  std::set<std::string> origins;
  for (const auto& p : patients) origins.insert(p.origin_tag);
  if (origins.size() < 2) throw ConfigError("population blocking needs at least two origin tags");
  if (!origins.contains(held_out_origin)) throw ConfigError("no patients with origin tag '" + held_out_origin + "'");
  FoldPlan plan;
  plan.mode = SplitMode::PopulationBlock;
  plan.k = 2;
  plan.patients.assign(patients.begin(), patients.end());
  plan.held_out_origin = held_out_origin;
  for (const auto& p : patients) plan.assignments[p.patient_id] = p.origin_tag == held_out_origin ? 0 : 1;
  return plan;
}

NestedSplit nested_split(const FoldPlan& plan, std::size_t outer_fold, std::size_t inner_k, std::uint64_t seed) {
  if (plan.mode == SplitMode::WindowLevelUnstratified)
    throw ConfigError("nested_split needs a patient-grouped plan");
  if (outer_fold >= plan.n_outer_folds()) throw ConfigError("outer fold index out of range");

  NestedSplit split;
  std::vector<PatientInfo> train_patients;
  for (const auto& p : plan.patients) {
    if (plan.assignments.at(p.patient_id) == outer_fold) {
      split.outer_test.push_back(p.patient_id);
    } else {
      split.outer_train.push_back(p.patient_id);
      train_patients.push_back(p);
    }
  }
  std::sort(split.outer_test.begin(), split.outer_test.end());
  std::sort(split.outer_train.begin(), split.outer_train.end());
  if (inner_k > train_patients.size())
    throw ConfigError("inner_k=" + std::to_string(inner_k) + " exceeds the " + std::to_string(train_patients.size()) +
                      " outer-train patients of fold " + std::to_string(outer_fold));

  const FoldPlan inner = plan_folds(train_patients, inner_k, derive_seed(seed, outer_fold));
  for (std::size_t f = 0; f < inner_k; ++f) {
    GroupSplit g;
    for (const auto& p : train_patients) (inner.assignments.at(p.patient_id) == f ? g.test : g.train).push_back(p.patient_id);
    std::sort(g.train.begin(), g.train.end());
    std::sort(g.test.begin(), g.test.end());
    split.inner.push_back(std::move(g));
  }
  return split;
}

AuditReport audit_leakage(std::span<const WindowRef> train, std::span<const WindowRef> test) {
  using Key = std::pair<std::string, std::string>;
  std::map<std::string, bool> train_patients;
  std::map<Key, std::set<std::pair<std::size_t, std::size_t>>> train_spans;
  for (const auto& w : train) {
    train_patients[w.patient_id] = true;
    train_spans[{w.patient_id, w.session_id}].emplace(w.sample_start, w.sample_len);
  }

  AuditReport report;
  std::set<std::string> subjects;
  std::set<std::tuple<std::string, std::string, std::size_t, std::size_t>> temporal;
  for (const auto& w : test) {
    if (train_patients.contains(w.patient_id)) subjects.insert(w.patient_id);
    const auto it = train_spans.find({w.patient_id, w.session_id});
    if (it == train_spans.end()) continue;
    for (const auto& [start, len] : it->second) {
      const bool overlap = start < w.sample_start + w.sample_len && w.sample_start < start + len;
      if (overlap) temporal.emplace(w.patient_id, w.session_id, start, w.sample_start);
    }
  }
  report.subject_leaks.assign(subjects.begin(), subjects.end());
  for (const auto& [p, s, a, b] : temporal) report.temporal_leaks.push_back({p, s, a, b});
  return report;
}

AuditReport audit_patients(std::span<const std::string> train, std::span<const std::string> test) {
  std::set<std::string> tr(train.begin(), train.end());
  AuditReport report;
  std::set<std::string> both;
  for (const auto& p : test)
    if (tr.contains(p)) both.insert(p);
  report.subject_leaks.assign(both.begin(), both.end());
  return report;
}

json to_json(const FoldPlan& plan) {
  json assignments = json::object();
  for (const auto& [p, f] : plan.assignments) assignments[p] = f;
  json patients = json::array();
  for (const auto& p : plan.patients)
    patients.push_back({{"patient_id", p.patient_id},
                        {"label", p.label},
                        {"n_windows", p.n_windows},
                        {"origin_tag", p.origin_tag}});
  json j = {{"mode", to_string(plan.mode)},
            {"k", plan.k},
            {"seed", plan.seed},
            {"patients", patients},
            {"assignments", assignments}};
  if (!plan.window_assignments.empty()) j["window_assignments"] = plan.window_assignments;
  if (!plan.held_out_origin.empty()) j["held_out_origin"] = plan.held_out_origin;
  return j;
}

FoldPlan fold_plan_from_json(const json& j) {
  try {
    FoldPlan plan;
    plan.mode = mode_from_string(j.at("mode").get<std::string>());
    plan.k = j.at("k").get<std::size_t>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& p : j.at("patients"))
      plan.patients.push_back({p.at("patient_id").get<std::string>(), p.at("label").get<int>(),
                               p.at("n_windows").get<std::size_t>(), p.at("origin_tag").get<std::string>()});
    for (const auto& [p, f] : j.at("assignments").items()) plan.assignments[p] = f.get<std::size_t>();
    if (j.contains("window_assignments"))
      plan.window_assignments = j.at("window_assignments").get<std::vector<std::size_t>>();
    plan.held_out_origin = j.value("held_out_origin", "");
    return plan;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed fold plan: ") + e.what());
  }
}

json to_json(const AuditReport& report) {
  json temporal = json::array();
  for (const auto& t : report.temporal_leaks)
    temporal.push_back({{"patient_id", t.patient_id},
                        {"session_id", t.session_id},
                        {"train_start", t.train_start},
                        {"test_start", t.test_start}});
  return {{"clean", report.clean()}, {"subject_leaks", report.subject_leaks}, {"temporal_leaks", temporal}};
}

AuditReport audit_report_from_json(const json& j) {
  AuditReport report;
  report.subject_leaks = j.at("subject_leaks").get<std::vector<std::string>>();
  for (const auto& t : j.at("temporal_leaks"))
    report.temporal_leaks.push_back({t.at("patient_id").get<std::string>(), t.at("session_id").get<std::string>(),
                                     t.at("train_start").get<std::size_t>(), t.at("test_start").get<std::size_t>()});
  return report;
}

}  // namespace ncv::folds
