#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <fstream>
#include <sstream>

#include "ncv/errors.hpp"
#include "ncv/evaluate.hpp"
#include "ncv/report.hpp"
#include "support.hpp"

using namespace ncv;
using namespace ncv::evaluate;

namespace {

std::optional<double> pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  if (pairs == 0.0) return std::nullopt;
  return wins / pairs;
}

std::vector<double> random_probs(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  for (auto& v : p) v = rng.below(5) == 0 ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
  return p;
}

selection::NcvResult fake_result(std::size_t n_m, std::size_t n_folds, std::uint64_t seed) {
  Rng rng(seed);
  selection::NcvResult r;
  r.backend = "test";
  r.seed = seed;
  r.outer_k = n_folds;
  r.inner_k = 3;
  r.channel_labels = {"F3", "Fz", "Cz", "P4"};
  for (std::size_t mi = 0; mi < n_m; ++mi) {
    selection::ConfigOutcome co;
    co.m = mi + 1;
    for (std::size_t f = 0; f < n_folds; ++f) {
      selection::FoldOutcome fo;
      fo.fold = f;
      for (std::size_t c = 0; c <= mi; ++c) fo.selected_channels.push_back(c);
      for (int p = 0; p < 4; ++p)
        fo.patients.push_back({"P" + std::to_string(f) + std::to_string(p), p % 2, "o", random_probs(rng, 3)});
      co.folds.push_back(fo);
    }
    co.modal_subset = co.folds[0].selected_channels;
    r.configs.push_back(co);
  }
  r.board.add({{0, 0.5}, {2, 0.75}});
  r.fold_boards.push_back(r.board);
  return r;
}

std::size_t count_detail_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::size_t n = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.at(3) != "mean" && f.at(3) != "std") ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("aggregate examples") {
  const std::vector<double> p{0.2, 0.8, 0.9};
  CHECK(aggregate(p, AggregationRule::Mean) == doctest::Approx(1.9 / 3.0).epsilon(1e-12));
  CHECK(aggregate(p, AggregationRule::Median) == 0.8);
  CHECK(aggregate(p, AggregationRule::Majority) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(aggregate(p, AggregationRule::Max) == 0.9);
  CHECK(aggregate(p, AggregationRule::Min) == 0.2);
  const std::vector<double> g{0.25, 1.0};
  CHECK(aggregate(g, AggregationRule::GMean) == doctest::Approx(0.5).epsilon(1e-12));
  const std::vector<double> with_zero{0.0, 0.9};
  CHECK(aggregate(with_zero, AggregationRule::GMean) == 0.0);
  const std::vector<double> even{0.1, 0.4, 0.6, 0.7};
  CHECK(aggregate(even, AggregationRule::Median) == doctest::Approx(0.5).epsilon(1e-12));
  for (auto rule : kAllRules) {
    const std::vector<double> one{0.37};
    CHECK(aggregate(one, rule) == (rule == AggregationRule::Majority ? 0.0 : 0.37));
  }
  CHECK_THROWS(aggregate(std::vector<double>{}, AggregationRule::Mean));
  CHECK_THROWS(aggregate(std::vector<double>{1.5}, AggregationRule::Mean));
}

TEST_CASE("aggregate equals direct arithmetic and stays within [min, max]") {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    auto p = random_probs(rng, 1 + rng.below(15));
    const double lo = *std::min_element(p.begin(), p.end());
    const double hi = *std::max_element(p.begin(), p.end());
    const double mean = std::accumulate(p.begin(), p.end(), 0.0) / p.size();
    auto sorted = p;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    double logsum = 0.0;
    bool zero = false;
    for (double v : p) {
      zero = zero || v == 0.0;
      logsum += zero ? 0.0 : std::log(v);
    }
    const double gmean = zero ? 0.0 : std::exp(logsum / n);
    const double majority = static_cast<double>(std::count_if(p.begin(), p.end(), [](double v) { return v >= 0.5; })) / n;

    CHECK(std::abs(aggregate(p, AggregationRule::Mean) - mean) <= 1e-12);
    CHECK(std::abs(aggregate(p, AggregationRule::Median) - median) <= 1e-12);
    CHECK(std::abs(aggregate(p, AggregationRule::GMean) - gmean) <= 1e-12);
    CHECK(aggregate(p, AggregationRule::Majority) == majority);
    CHECK(aggregate(p, AggregationRule::Max) == hi);
    CHECK(aggregate(p, AggregationRule::Min) == lo);
    CHECK(aggregate(p, AggregationRule::GMean) <= aggregate(p, AggregationRule::Mean) + 1e-15);
    for (auto rule : {AggregationRule::Mean, AggregationRule::Median, AggregationRule::GMean}) {
      const double s = aggregate(p, rule);
      REQUIRE(s >= lo);
      REQUIRE(s <= hi);
    }

    auto shuffled = p;
    rng.shuffle(shuffled);
    CHECK(std::abs(aggregate(shuffled, AggregationRule::Mean) - aggregate(p, AggregationRule::Mean)) <= 1e-15);

    // Linearity of the mean in one coordinate.
    const double a = rng.uniform(), b = rng.uniform(), t = rng.uniform();
    auto pa = p, pb = p, pt = p;
    pa[0] = a;
    pb[0] = b;
    pt[0] = t * a + (1 - t) * b;
    CHECK(std::abs(aggregate(pt, AggregationRule::Mean) -
                   (t * aggregate(pa, AggregationRule::Mean) + (1 - t) * aggregate(pb, AggregationRule::Mean))) <=
          1e-12);
  }
}

TEST_CASE("rule names round-trip") {
  for (auto rule : kAllRules) CHECK(rule_from_string(to_string(rule)) == rule);
  CHECK_THROWS_AS(rule_from_string("vote"), ConfigError);
}

TEST_CASE("decision threshold: 0.5 is positive") {
  CHECK(decide(0.5) == 1);
  CHECK(decide(std::nextafter(0.5, 0.0)) == 0);
  const auto d = decide_patient("P", 1, {0.4, 0.6}, AggregationRule::Mean);
  CHECK(d.score == 0.5);
  CHECK(d.decision == 1);
}

TEST_CASE("AUC equals the brute-force pairwise value exactly") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(19);
    const auto s = random_probs(rng, n);
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng.below(2));
    const auto got = auc(s, y);
    const auto want = pairwise_auc(s, y);
    REQUIRE(got.has_value() == want.has_value());
    if (got) REQUIRE(*got == *want);
  }
}

TEST_CASE("AUC examples and monotone invariance") {
  const std::vector<double> sep{0.1, 0.2, 0.8, 0.9};
  const std::vector<int> y{0, 0, 1, 1};
  CHECK(*auc(sep, y) == 1.0);
  const auto m = compute_metrics(sep, y);
  CHECK(m.accuracy == 1.0);
  const std::vector<double> same(4, 0.3);
  CHECK(*auc(same, y) == 0.5);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(15);
    const auto s = random_probs(rng, n);
    std::vector<int> lab(n);
    for (auto& v : lab) v = static_cast<int>(rng.below(2));
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3 * s[i]) - 7.0;
    CHECK(auc(s, lab) == auc(t, lab));
  }
}

TEST_CASE("compute_metrics: precision and AUC absent rather than zero") {
  const std::vector<double> low{0.1, 0.2, 0.3};
  const std::vector<int> y{0, 1, 0};
  const auto m = compute_metrics(low, y);
  CHECK_FALSE(m.precision.has_value());
  CHECK(*m.recall == 0.0);
  CHECK(m.accuracy == doctest::Approx(2.0 / 3.0));

  const std::vector<int> one_class{1, 1, 1};
  const auto m2 = compute_metrics(low, one_class);
  CHECK_FALSE(m2.auc.has_value());
  CHECK_THROWS(compute_metrics(std::vector<double>{}, std::vector<int>{}));

  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    const auto s = random_probs(rng, n);
    std::vector<int> lab(n);
    for (auto& v : lab) v = static_cast<int>(rng.below(2));
    double tp = 0, fp = 0, fn = 0, correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int pred = s[i] >= 0.5;
      correct += pred == lab[i];
      tp += pred && lab[i];
      fp += pred && !lab[i];
      fn += !pred && lab[i];
    }
    const auto r = compute_metrics(s, lab);
    CHECK(r.accuracy == correct / n);
    if (tp + fp > 0) CHECK(*r.precision == tp / (tp + fp));
    if (tp + fn > 0) CHECK(*r.recall == tp / (tp + fn));
    for (auto v : {r.auc, r.precision, r.recall})
      if (v) CHECK((*v >= 0.0 && *v <= 1.0));
  }
}

TEST_CASE("summarize examples") {
  auto row = [](double acc) {
    MetricsRow r;
    r.accuracy = acc;
    return r;
  };
  const std::vector<MetricsRow> same{row(0.8), row(0.8)};
  CHECK(*summarize(same).accuracy.mean == doctest::Approx(0.8));
  CHECK(*summarize(same).accuracy.std == 0.0);
  const std::vector<MetricsRow> two{row(0.7), row(0.9)};
  CHECK(*summarize(two).accuracy.mean == doctest::Approx(0.8));
  CHECK(*summarize(two).accuracy.std == doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));
  const std::vector<MetricsRow> single{row(0.6)};
  CHECK(*summarize(single).accuracy.std == 0.0);
  CHECK_FALSE(summarize(single).auc.mean.has_value());
}

TEST_CASE("summarize matches recomputation") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MetricsRow> folds(5);
    std::vector<double> acc;
    for (auto& f : folds) {
      f.accuracy = rng.uniform();
      f.auc = rng.uniform();
      acc.push_back(f.accuracy);
    }
    const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / 5.0;
    double ss = 0.0;
    for (double a : acc) ss += (a - mean) * (a - mean);
    const auto s = summarize(folds);
    CHECK(std::abs(*s.accuracy.mean - mean) < 1e-12);
    CHECK(std::abs(*s.accuracy.std - std::sqrt(ss / 4.0)) < 1e-12);
    CHECK(*s.accuracy.std >= 0.0);
  }
}

TEST_CASE("report CSV: header-only for an empty result") {
  selection::NcvResult empty;
  const auto rows = report::report_rows(empty, kAllRules, true);
  CHECK(report::to_csv(rows) == std::string(report::kCsvHeader) + "\n");
}

TEST_CASE("ablation grid: 6 rules x 3 m values x 5 folds detail rows") {
  const auto r = fake_result(3, 5, 1);
  const auto csv = report::to_csv(report::report_rows(r, kAllRules, false));
  CHECK(count_detail_rows(csv) == 90);
  // Plus a mean and a std row per (m, rule).
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 90 + 36);
  const auto again = report::to_csv(report::report_rows(fake_result(3, 5, 1), kAllRules, false));
  CHECK(csv == again);
}

TEST_CASE("report rows: per-fold metrics and summaries agree with evaluate") {
  const auto r = fake_result(1, 3, 2);
  const std::vector<AggregationRule> rules{AggregationRule::Median};
  const auto rows = report::report_rows(r, rules, true);
  REQUIRE(rows.size() == 2 * (3 + 2));
  std::vector<MetricsRow> folds;
  for (std::size_t f = 0; f < 3; ++f) {
    const auto m = report::fold_metrics(r.configs[0].folds[f], AggregationRule::Median);
    CHECK(rows[f].acc == m.accuracy);
    CHECK(rows[f].rule == "median");
    CHECK(rows[f].fold == std::to_string(f));
    CHECK(rows[f].n_test_patients == 4u);
    folds.push_back(m);
  }
  CHECK(rows[3].fold == "mean");
  CHECK(rows[3].acc == summarize(folds).accuracy.mean);
  CHECK(rows[4].fold == "std");
  CHECK(rows[5].rule == "window");
  CHECK(report::to_csv(rows).find(",NA\n") != std::string::npos);  // summary rows have no patient count
}

TEST_CASE("prediction cache round-trips losslessly") {
  auto r = fake_result(2, 4, 3);
  r.paradigm = selection::Paradigm::NoStratification;
  r.leakage_intentional = true;
  r.configs[0].folds[1].audit.subject_leaks = {"P10"};
  r.configs[0].folds[1].unscored_patients = {"Q"};
  const auto back = report::ncv_result_from_json(report::to_json(r));
  CHECK(report::to_json(back) == report::to_json(r));
  CHECK(report::to_json(report::ncv_result_from_json(nlohmann::json::parse(report::to_json(r).dump()))) ==
        report::to_json(r));
  CHECK_THROWS_AS(report::ncv_result_from_json(nlohmann::json{{"format", "other"}}), DataError);
}

TEST_CASE("report json flags leakage status and selected labels") {
  auto r = fake_result(1, 2, 4);
  auto j = report::report_json(r, nlohmann::json{{"seed", 4}});
  CHECK(j["leakage"]["status"] == "clean");
  CHECK(j["configs"][0]["folds"][0]["selected_labels"] == nlohmann::json{"F3"});
  CHECK(j["channel_scores"]["Cz"] == 0.75);
  r.leakage_intentional = true;
  r.configs[0].folds[0].audit.subject_leaks = {"x"};
  j = report::report_json(r, nlohmann::json::object());
  CHECK(j["leakage"]["status"] == "intentional-baseline");
  CHECK(j["leakage"]["subject_leaks"] == 1);
}

TEST_CASE("emit_report writes both files and surfaces I/O errors with the path") {
  const auto dir = testing::temp_dir("emit");
  const auto r = fake_result(2, 3, 5);
  const std::vector<AggregationRule> rules{AggregationRule::Mean};
  report::emit_report(r, rules, nlohmann::json::object(), dir / "out");
  CHECK(std::filesystem::exists(dir / "out" / "report.csv"));
  CHECK(std::filesystem::exists(dir / "out" / "report.json"));
  std::ofstream(dir / "blocker") << "file";
  CHECK_THROWS_WITH_AS(report::emit_report(r, rules, nlohmann::json::object(), dir / "blocker" / "sub"),
                       doctest::Contains("blocker"), DataError);
}
