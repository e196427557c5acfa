#include "ncv/selection.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "ncv/errors.hpp"
#include "ncv/evaluate.hpp"
#include "ncv/parallel.hpp"

namespace ncv::selection {

using spectro::SpectrogramWindow;
using WindowPtrs = std::vector<const SpectrogramWindow*>;

void ChannelScoreBoard::add(const std::map<std::size_t, double>& fold_accuracy) {
  for (const auto& [c, a] : fold_accuracy) scores[c].push_back(a);
}

std::map<std::size_t, double> ChannelScoreBoard::mean() const {
  std::map<std::size_t, double> out;
  for (const auto& [c, v] : scores)
    if (!v.empty()) out[c] = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return out;
}

std::map<std::size_t, double> score_channels(const model::WindowClassifier& model,
                                             std::span<const SpectrogramWindow* const> val_windows) {
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> tally;  // channel -> (correct, total)
  for (const auto* w : val_windows) {
    if (!w->active) continue;
    auto& t = tally[w->channel_index];
    t.first += evaluate::decide(model.predict_proba(*w)) == w->label() ? 1 : 0;
    ++t.second;
  }
  std::map<std::size_t, double> out;
  for (const auto& [c, t] : tally) out[c] = static_cast<double>(t.first) / static_cast<double>(t.second);
  return out;
}

std::vector<std::size_t> select_top_m(const ChannelScoreBoard& board, std::size_t m) {
  if (m == 0) throw ConfigError("select_top_m: m must be >= 1");
  const auto means = board.mean();
  if (means.empty()) throw ConfigError("select_top_m: empty score board");
  std::vector<std::pair<std::size_t, double>> ranked(means.begin(), means.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  ranked.resize(std::min(m, ranked.size()));
  std::vector<std::size_t> out;
  for (const auto& [c, _] : ranked) out.push_back(c);
  std::sort(out.begin(), out.end());
  return out;
}

std::string to_string(Paradigm p) {
  switch (p) {
    case Paradigm::Stratified:
      return "stratified";
    case Paradigm::NoStratification:
      return "no_stratification";
    case Paradigm::PopulationBlock:
      return "population_block";
  }
  return "?";
}

Paradigm paradigm_from_string(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), '-', '_');
  if (t == "stratified") return Paradigm::Stratified;
  if (t == "no_stratification") return Paradigm::NoStratification;
  if (t == "population_block") return Paradigm::PopulationBlock;
  throw ConfigError("unknown paradigm '" + s + "' (expected stratified|no-stratification|population-block)");
}

folds::WindowRef window_ref(const SpectrogramWindow& w) {
  return {w.patient_id, w.session_id, w.sample_start, w.sample_len};
}

std::vector<folds::PatientInfo> patient_infos(const std::vector<SpectrogramWindow>& windows) {
  std::vector<folds::PatientInfo> out;
  std::map<std::string, std::size_t> index;
  std::map<std::string, std::set<std::pair<std::string, std::size_t>>> outer_windows;
  for (const auto& w : windows) {
    auto [it, inserted] = index.try_emplace(w.patient_id, out.size());
    if (inserted) out.push_back({w.patient_id, w.label(), 0, w.origin_tag});
    if (out[it->second].label != w.label())
      throw DataError("patient '" + w.patient_id + "' has recordings with different diagnoses");
    outer_windows[w.patient_id].emplace(w.session_id, w.window_index);
  }
  for (auto& p : out) p.n_windows = outer_windows[p.patient_id].size();
  return out;
}

namespace {

std::vector<folds::WindowRef> refs(const WindowPtrs& ws) {
  std::vector<folds::WindowRef> out;
  out.reserve(ws.size());
  for (const auto* w : ws) out.push_back(window_ref(*w));
  return out;
}

/// Active windows of the given patients, optionally restricted to channels.
WindowPtrs gather(const std::vector<SpectrogramWindow>& windows, const std::set<std::string>& patients,
                  const std::set<std::size_t>* channels = nullptr) {
  WindowPtrs out;
  for (const auto& w : windows) {
    if (!w.active || !patients.contains(w.patient_id)) continue;
    if (channels && !channels->contains(w.channel_index)) continue;
    out.push_back(&w);
  }
  return out;
}

void require_clean(const folds::AuditReport& report, const std::string& where) {
  if (report.clean()) return;
  std::string msg = "leakage detected in " + where + ":";
  for (const auto& p : report.subject_leaks) msg += " subject " + p + ";";
  if (!report.temporal_leaks.empty()) msg += " " + std::to_string(report.temporal_leaks.size()) + " temporal overlaps";
  throw LeakageError(msg);
}

std::vector<std::string> origins_of(const std::vector<SpectrogramWindow>& windows,
                                    const std::set<std::string>& patients) {
  std::set<std::string> tags;
  for (const auto& w : windows)
    if (patients.contains(w.patient_id)) tags.insert(w.origin_tag);
  return {tags.begin(), tags.end()};
}

/// Predicts every window and groups the probabilities by patient (in window order).
void predict_patients(const model::WindowClassifier& clf, const WindowPtrs& test,
                      const std::vector<std::string>& test_patients, FoldOutcome& out) {
  std::map<std::string, std::size_t> slot;
  for (const auto* w : test) {
    auto [it, inserted] = slot.try_emplace(w->patient_id, out.patients.size());
    if (inserted) out.patients.push_back({w->patient_id, w->label(), w->origin_tag, {}});
    out.patients[it->second].window_probs.push_back(clf.predict_proba(*w));
  }
  std::sort(out.patients.begin(), out.patients.end(),
            [](const PatientPrediction& a, const PatientPrediction& b) { return a.patient_id < b.patient_id; });
  for (const auto& p : test_patients)
    if (!slot.contains(p)) out.unscored_patients.push_back(p);
}

std::vector<std::size_t> modal_subset(const std::vector<FoldOutcome>& folds) {
  std::vector<std::size_t> best;
  std::size_t best_count = 0;
  for (const auto& f : folds) {
    const auto count = static_cast<std::size_t>(std::count_if(
        folds.begin(), folds.end(), [&](const FoldOutcome& g) { return g.selected_channels == f.selected_channels; }));
    if (count > best_count) {
      best_count = count;
      best = f.selected_channels;
    }
  }
  return best;
}

struct FoldWork {
  ChannelScoreBoard board;
  std::vector<FoldOutcome> per_m;  // indexed like cfg.m_values
};

/// One outer fold of the grouped paradigms (stratified and population block).
FoldWork run_outer_fold(const std::vector<SpectrogramWindow>& windows, const folds::FoldPlan& plan,
                        std::size_t fold, const model::ClassifierBackend& backend, const NcvConfig& cfg) {
  const auto split = folds::nested_split(plan, fold, cfg.inner_k, cfg.seed);
  const std::set<std::string> train_ids(split.outer_train.begin(), split.outer_train.end());
  const std::set<std::string> test_ids(split.outer_test.begin(), split.outer_test.end());
  const std::string where = "outer fold " + std::to_string(fold);

  const WindowPtrs outer_train = gather(windows, train_ids);
  const WindowPtrs outer_test = gather(windows, test_ids);
  const auto test_refs = refs(outer_test);
  const auto outer_audit = folds::audit_leakage(refs(outer_train), test_refs);
  require_clean(outer_audit, where);

  FoldWork work;
  for (std::size_t k = 0; k < split.inner.size(); ++k) {
    const auto& inner = split.inner[k];
    const std::set<std::string> itrain(inner.train.begin(), inner.train.end());
    const std::set<std::string> ival(inner.test.begin(), inner.test.end());
    const WindowPtrs tr = gather(windows, itrain);
    const WindowPtrs va = gather(windows, ival);
    const std::string inner_where = where + ", inner fold " + std::to_string(k);
    require_clean(folds::audit_leakage(refs(tr), refs(va)), inner_where);
    require_clean(folds::audit_leakage(refs(tr), test_refs), inner_where + " (train vs outer test)");
    require_clean(folds::audit_leakage(refs(va), test_refs), inner_where + " (validation vs outer test)");
    const auto clf = backend.fit(tr);
    work.board.add(score_channels(*clf, va));
  }

  // Equal selections share one retrained model.
  std::map<std::vector<std::size_t>, FoldOutcome> by_subset;
  for (std::size_t m : cfg.m_values) {
    const auto selected = select_top_m(work.board, m);
    auto it = by_subset.find(selected);
    if (it == by_subset.end()) {
      const std::set<std::size_t> chans(selected.begin(), selected.end());
      const WindowPtrs tr = gather(windows, train_ids, &chans);
      const WindowPtrs te = gather(windows, test_ids, &chans);
      FoldOutcome out;
      out.fold = fold;
      out.selected_channels = selected;
      out.train_origins = origins_of(windows, train_ids);
      out.test_origins = origins_of(windows, test_ids);
      out.n_train_windows = tr.size();
      out.audit = outer_audit;
      const auto clf = backend.fit(tr);
      predict_patients(*clf, te, split.outer_test, out);
      it = by_subset.emplace(selected, std::move(out)).first;
    }
    work.per_m.push_back(it->second);
  }
  return work;
}

NcvResult run_grouped(const std::vector<SpectrogramWindow>& windows, const std::vector<std::string>& channel_labels,
                      const model::ClassifierBackend& backend, const NcvConfig& cfg, const folds::FoldPlan& plan,
                      Paradigm paradigm) {
  if (cfg.m_values.empty()) throw ConfigError("m_values must not be empty");
  const std::size_t n_folds = plan.n_outer_folds();
  std::vector<FoldWork> work(n_folds);
  parallel_for(n_folds, cfg.workers,
               [&](std::size_t f) { work[f] = run_outer_fold(windows, plan, f, backend, cfg); });

  NcvResult result;
  result.paradigm = paradigm;
  result.backend = backend.name();
  result.seed = cfg.seed;
  result.outer_k = n_folds;
  result.inner_k = cfg.inner_k;
  result.held_out_origin = plan.held_out_origin;
  result.channel_labels = channel_labels;
  for (const auto& w : work) {
    result.fold_boards.push_back(w.board);
    for (const auto& [c, v] : w.board.scores)
      result.board.scores[c].insert(result.board.scores[c].end(), v.begin(), v.end());
  }
  for (std::size_t i = 0; i < cfg.m_values.size(); ++i) {
    ConfigOutcome co;
    co.m = cfg.m_values[i];
    for (const auto& w : work) co.folds.push_back(w.per_m[i]);
    co.modal_subset = modal_subset(co.folds);
    result.configs.push_back(std::move(co));
  }
  return result;
}

}  // namespace

NcvResult run_nested_cv(const std::vector<SpectrogramWindow>& windows, const std::vector<std::string>& channel_labels,
                        const model::ClassifierBackend& backend, const NcvConfig& cfg) {
  const auto patients = patient_infos(windows);
  std::size_t per_class[2] = {0, 0};
  for (const auto& p : patients) ++per_class[p.label];
  if (per_class[0] < cfg.outer_k || per_class[1] < cfg.outer_k)
    throw ConfigError("stratified nested CV needs at least outer_k=" + std::to_string(cfg.outer_k) +
                      " patients per class (have " + std::to_string(per_class[1]) + " PD, " +
                      std::to_string(per_class[0]) + " control)");
  const auto plan = folds::plan_folds(patients, cfg.outer_k, cfg.seed);
  return run_grouped(windows, channel_labels, backend, cfg, plan, Paradigm::Stratified);
}

NcvResult run_baseline(const std::vector<SpectrogramWindow>& windows, const std::vector<std::string>& channel_labels,
                       const model::ClassifierBackend& backend, Paradigm mode, const NcvConfig& cfg) {
  if (mode == Paradigm::Stratified) return run_nested_cv(windows, channel_labels, backend, cfg);

  if (mode == Paradigm::PopulationBlock) {
    const auto patients = patient_infos(windows);
    std::string origin = cfg.block_origin;
    if (origin.empty()) {
      std::set<std::string> tags;
      for (const auto& p : patients) tags.insert(p.origin_tag);
      if (!tags.empty()) origin = *tags.begin();
    }
    const auto plan = folds::plan_population_block(patients, origin);
    return run_grouped(windows, channel_labels, backend, cfg, plan, Paradigm::PopulationBlock);
  }

  // Window-level split over every active window: the leakage baseline.
  WindowPtrs active;
  for (const auto& w : windows)
    if (w.active) active.push_back(&w);
  const auto active_refs = refs(active);
  const auto plan = folds::plan_window_folds(active_refs, cfg.outer_k, cfg.seed);
  std::set<std::size_t> channels;
  for (const auto* w : active) channels.insert(w->channel_index);

  std::vector<FoldOutcome> outcomes(cfg.outer_k);
  parallel_for(cfg.outer_k, cfg.workers, [&](std::size_t f) {
    WindowPtrs tr, te;
    std::set<std::string> tr_ids, te_ids;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (plan.window_assignments[i] == f) {
        te.push_back(active[i]);
        te_ids.insert(active[i]->patient_id);
      } else {
        tr.push_back(active[i]);
        tr_ids.insert(active[i]->patient_id);
      }
    }
    FoldOutcome& out = outcomes[f];
    out.fold = f;
    out.selected_channels.assign(channels.begin(), channels.end());
    out.train_origins = origins_of(windows, tr_ids);
    out.test_origins = origins_of(windows, te_ids);
    out.n_train_windows = tr.size();
    out.audit = folds::audit_leakage(refs(tr), refs(te));
    const auto clf = backend.fit(tr);
    predict_patients(*clf, te, {te_ids.begin(), te_ids.end()}, out);
  });

  NcvResult result;
  result.paradigm = Paradigm::NoStratification;
  result.backend = backend.name();
  result.seed = cfg.seed;
  result.outer_k = cfg.outer_k;
  result.inner_k = 0;
  result.leakage_intentional = true;
  result.channel_labels = channel_labels;
  ConfigOutcome co;
  co.m = channels.size();
  co.folds = std::move(outcomes);
  co.modal_subset = modal_subset(co.folds);
  result.configs.push_back(std::move(co));
  return result;
}

}  // namespace ncv::selection
