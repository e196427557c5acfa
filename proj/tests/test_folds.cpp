#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ncv/errors.hpp"
#include "ncv/folds.hpp"
#include "support.hpp"

using namespace ncv;
using namespace ncv::folds;

namespace {

std::vector<PatientInfo> cohort(std::size_t n_pd, std::size_t n_ctl, Rng* rng = nullptr) {
  std::vector<PatientInfo> out;
  for (std::size_t i = 0; i < n_pd + n_ctl; ++i)
    out.push_back({"P" + std::to_string(i), i < n_pd ? 1 : 0, rng ? 1 + rng->below(6) : 1, "o"});
  return out;
}

/// Every patient in exactly one fold and per-class counts within 1 of n_c/k.
void check_plan(const std::vector<PatientInfo>& patients, const FoldPlan& plan) {
  REQUIRE(plan.assignments.size() == patients.size());
  std::vector<std::array<double, 2>> counts(plan.k, {0, 0});
  double totals[2] = {0, 0};
  for (const auto& p : patients) {
    const auto it = plan.assignments.find(p.patient_id);
    REQUIRE(it != plan.assignments.end());
    REQUIRE(it->second < plan.k);
    counts[it->second][p.label] += 1;
    totals[p.label] += 1;
  }
  for (const auto& c : counts)
    for (int l = 0; l < 2; ++l) REQUIRE(std::abs(c[l] - totals[l] / static_cast<double>(plan.k)) <= 1.0);
}

std::vector<WindowRef> windows_of(const std::string& pid, std::size_t n, std::size_t len, std::size_t hop) {
  std::vector<WindowRef> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({pid, "s", i * hop, len});
  return out;
}

}  // namespace

TEST_CASE("6 patients, k=3: one PD and one control per fold") {
  const auto patients = cohort(3, 3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto plan = plan_folds(patients, 3, seed);
    std::vector<std::array<int, 2>> counts(3, {0, 0});
    for (const auto& p : patients) counts[plan.assignments.at(p.patient_id)][p.label]++;
    for (const auto& c : counts) {
      CHECK(c[0] == 1);
      CHECK(c[1] == 1);
    }
  }
}

TEST_CASE("k = n_patients gives singleton folds") {
  const auto patients = cohort(4, 3);
  const auto plan = plan_folds(patients, 7, 5);
  std::set<std::size_t> used;
  for (const auto& [p, f] : plan.assignments) used.insert(f);
  CHECK(used.size() == 7);
}

TEST_CASE("plan_folds errors") {
  CHECK_THROWS_AS(plan_folds(cohort(2, 2), 5, 0), ConfigError);
  CHECK_THROWS_AS(plan_folds(cohort(4, 0), 2, 0), ConfigError);
  CHECK_THROWS_AS(plan_folds(cohort(2, 2), 1, 0), ConfigError);
}

TEST_CASE("plan_folds property: partition and class balance over random instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n_pd = 1 + rng.below(15), n_ctl = 1 + rng.below(15);
    const auto patients = cohort(n_pd, n_ctl, &rng);
    const std::size_t k = 2 + rng.below(std::min<std::size_t>(n_pd + n_ctl - 1, 8));
    const auto plan = plan_folds(patients, k, rng.next());
    check_plan(patients, plan);
  }
}

TEST_CASE("plan_folds is deterministic and order-sensitive only through the seed") {
  const auto patients = cohort(7, 9);
  CHECK(plan_folds(patients, 4, 3).assignments == plan_folds(patients, 4, 3).assignments);
  bool differs = false;
  for (std::uint64_t s = 0; s < 10 && !differs; ++s)
    differs = plan_folds(patients, 4, s).assignments != plan_folds(patients, 4, s + 100).assignments;
  CHECK(differs);
}

TEST_CASE("nested_split: 20 patients, k=5, K=3") {
  const auto patients = cohort(10, 10);
  const auto plan = plan_folds(patients, 5, 9);
  for (std::size_t f = 0; f < 5; ++f) {
    const auto s = nested_split(plan, f, 3, 9);
    CHECK(s.outer_test.size() == 4);
    CHECK(s.outer_train.size() == 16);
    REQUIRE(s.inner.size() == 3);
    for (const auto& g : s.inner) {
      CHECK(g.test.size() >= 5);
      CHECK(g.test.size() <= 6);
      CHECK(g.train.size() + g.test.size() == 16);
      for (const auto& p : s.outer_test) {
        CHECK(std::find(g.train.begin(), g.train.end(), p) == g.train.end());
        CHECK(std::find(g.test.begin(), g.test.end(), p) == g.test.end());
      }
      CHECK(audit_patients(g.train, g.test).clean());
      CHECK(audit_patients(g.train, s.outer_test).clean());
    }
    const auto again = nested_split(plan, f, 3, 9);
    CHECK(again.outer_test == s.outer_test);
    for (std::size_t i = 0; i < 3; ++i) CHECK(again.inner[i].test == s.inner[i].test);
  }
  CHECK_THROWS_AS(nested_split(plan, 5, 3, 9), ConfigError);
  CHECK_THROWS_AS(nested_split(plan, 0, 17, 9), ConfigError);
}

TEST_CASE("nested_split property: inner folds partition outer-train and never see outer-test") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_pd = 3 + rng.below(10), n_ctl = 3 + rng.below(10);
    const auto patients = cohort(n_pd, n_ctl, &rng);
    const std::size_t k = 2 + rng.below(3);
    const auto plan = plan_folds(patients, k, rng.next());
    const std::uint64_t seed = rng.next();
    for (std::size_t f = 0; f < k; ++f) {
      const auto s = nested_split(plan, f, 2, seed);
      const std::set<std::string> test(s.outer_test.begin(), s.outer_test.end());
      std::multiset<std::string> inner_tests;
      for (const auto& g : s.inner) {
        for (const auto& p : g.train) REQUIRE_FALSE(test.contains(p));
        for (const auto& p : g.test) {
          REQUIRE_FALSE(test.contains(p));
          inner_tests.insert(p);
        }
      }
      REQUIRE(inner_tests == std::multiset<std::string>(s.outer_train.begin(), s.outer_train.end()));
    }
  }
}

TEST_CASE("inner folds reshuffle per outer fold") {
  const auto patients = cohort(12, 12);
  const auto plan = plan_folds(patients, 3, 1);
  // Same outer fold, different base seed, usually different inner splits.
  bool differs = false;
  for (std::uint64_t s = 0; s < 10 && !differs; ++s)
    differs = nested_split(plan, 0, 3, s).inner[0].test != nested_split(plan, 0, 3, s + 50).inner[0].test;
  CHECK(differs);
}

TEST_CASE("audit_leakage examples") {
  const auto a = windows_of("A", 3, 100, 100);
  const auto b = windows_of("B", 3, 100, 100);
  CHECK(audit_leakage(a, b).clean());

  SUBCASE("same patient on both sides") {
    const std::vector<WindowRef> train{a[0]}, test{a[2]};
    const auto r = audit_leakage(train, test);
    CHECK(r.subject_leaks == std::vector<std::string>{"A"});
    CHECK(r.temporal_leaks.empty());
  }
  SUBCASE("overlapping windows of one recording") {
    const auto w = windows_of("C", 4, 100, 25);
    const std::vector<WindowRef> train{w[0], w[2]}, test{w[1], w[3]};
    const auto r = audit_leakage(train, test);
    CHECK_FALSE(r.clean());
    CHECK(r.temporal_leaks.size() == 4);  // spans of 100 at hop 25: every pair overlaps
    CHECK(r.subject_leaks == std::vector<std::string>{"C"});
  }
}

TEST_CASE("audit_leakage temporal findings match a brute-force overlap count") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<WindowRef> train, test;
    for (int i = 0; i < 12; ++i) {
      WindowRef w{"P" + std::to_string(rng.below(3)), "s" + std::to_string(rng.below(2)), rng.below(50),
                  1 + rng.below(20)};
      (rng.below(2) ? train : test).push_back(w);
    }
    std::set<std::tuple<std::string, std::string, std::size_t, std::size_t>> expect;
    std::set<std::string> subjects;
    for (const auto& t : train)
      for (const auto& e : test) {
        if (t.patient_id == e.patient_id) subjects.insert(t.patient_id);
        if (t.patient_id == e.patient_id && t.session_id == e.session_id &&
            std::max(t.sample_start, e.sample_start) < std::min(t.sample_start + t.sample_len, e.sample_start + e.sample_len))
          expect.emplace(t.patient_id, t.session_id, t.sample_start, e.sample_start);
      }
    const auto r = audit_leakage(train, test);
    std::set<std::tuple<std::string, std::string, std::size_t, std::size_t>> got;
    for (const auto& l : r.temporal_leaks) got.emplace(l.patient_id, l.session_id, l.train_start, l.test_start);
    REQUIRE(got == expect);
    REQUIRE(std::set<std::string>(r.subject_leaks.begin(), r.subject_leaks.end()) == subjects);
  }
}

TEST_CASE("window-level plan always leaks multi-window patients") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<WindowRef> windows;
    const std::size_t n_patients = 2 + rng.below(6);
    for (std::size_t p = 0; p < n_patients; ++p) {
      const auto w = windows_of("P" + std::to_string(p), 2 + rng.below(6), 100, 50);
      windows.insert(windows.end(), w.begin(), w.end());
    }
    const std::size_t k = 2 + rng.below(std::min<std::size_t>(4, windows.size() - 1));
    const auto plan = plan_window_folds(windows, k, rng.next());
    REQUIRE(plan.window_assignments.size() == windows.size());
    std::set<std::string> leaked;
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<WindowRef> tr, te;
      for (std::size_t i = 0; i < windows.size(); ++i) (plan.window_assignments[i] == f ? te : tr).push_back(windows[i]);
      const auto r = audit_leakage(tr, te);
      leaked.insert(r.subject_leaks.begin(), r.subject_leaks.end());
    }
    REQUIRE(leaked.size() == n_patients);
  }
}

TEST_CASE("population block holds out one origin") {
  std::vector<PatientInfo> patients = {
      {"a1", 1, 1, "site_a"}, {"a2", 0, 1, "site_a"}, {"b1", 1, 1, "site_b"}, {"b2", 0, 1, "site_b"}, {"b3", 0, 1, "site_b"}};
  const auto plan = plan_population_block(patients, "site_b");
  CHECK(plan.n_outer_folds() == 1);
  const auto s = nested_split(plan, 0, 2, 1);
  CHECK(s.outer_test == std::vector<std::string>{"b1", "b2", "b3"});
  CHECK(s.outer_train == std::vector<std::string>{"a1", "a2"});
  CHECK_THROWS_AS(plan_population_block(patients, "sandiego"), ConfigError);
  std::vector<PatientInfo> one_site = {{"a", 1, 1, "x"}, {"b", 0, 1, "x"}};
  CHECK_THROWS_AS(plan_population_block(one_site, "x"), ConfigError);
}

TEST_CASE("fold plans round-trip through json") {
  const auto patients = cohort(5, 6);
  const auto plan = plan_folds(patients, 3, 42);
  const auto back = fold_plan_from_json(to_json(plan));
  CHECK(back.assignments == plan.assignments);
  CHECK(back.k == plan.k);
  CHECK(back.seed == plan.seed);
  CHECK(to_json(back) == to_json(plan));
  AuditReport r;
  r.subject_leaks = {"x"};
  r.temporal_leaks = {{"x", "s", 0, 10}};
  CHECK(to_json(audit_report_from_json(to_json(r))) == to_json(r));
}
