#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ncv/channel_template.hpp"
#include "ncv/preprocess.hpp"
#include "ncv/spectro.hpp"
#include "support.hpp"

using namespace ncv;
using namespace ncv::spectro;

namespace {

/// Independent STFT: explicit edge padding, periodic Hann, naive DFT.
Matrix<double> oracle_stft(const std::vector<double>& x, const WindowingConfig& cfg) {
  const std::size_t half = cfg.n_fft / 2;
  std::vector<double> padded(x.size() + cfg.n_fft, 0.0);
  std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(half));
  const std::size_t frames = x.size() / cfg.stft_hop;
  Matrix<double> out(half, frames);
  for (std::size_t i = 0; i < frames; ++i) {
    std::vector<double> frame(cfg.n_fft);
    for (std::size_t k = 0; k < cfg.n_fft; ++k)
      frame[k] = padded[i * cfg.stft_hop + k] *
                 (0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(cfg.n_fft)));
    const auto mag = testing::naive_dft_magnitude(frame);
    for (std::size_t f = 0; f < half; ++f) out(f, i) = mag[f];
  }
  return out;
}

WindowingConfig small_cfg() {
  WindowingConfig c;
  c.outer_len = 512;
  c.outer_hop = 128;
  c.n_fft = 32;
  c.stft_hop = 8;
  return c;
}

preprocess::HarmonizedRecording harmonized(const std::string& pid, std::size_t channels, std::size_t n,
                                           std::vector<bool> active, std::uint64_t seed) {
  Rng rng(seed);
  preprocess::HarmonizedRecording h;
  h.patient_id = pid;
  h.session_id = "s";
  h.origin_tag = "o";
  h.diagnosis = dataset::Diagnosis::Parkinson;
  h.data = Matrix<double>(channels, n);
  h.active_mask = active;
  h.degenerate.assign(channels, false);
  for (std::size_t c = 0; c < channels; ++c)
    if (active[c])
      for (auto& v : h.data.row(c)) v = rng.uniform(-1, 1);
  return h;
}

}  // namespace

TEST_CASE("segment examples") {
  const WindowingConfig cfg;
  CHECK(segment_starts(16384, cfg) == std::vector<std::size_t>{0});
  CHECK(segment_starts(20480, cfg) == std::vector<std::size_t>{0, 4096});

  std::vector<double> shortsig(10000, 1.0);
  const auto w = segment(shortsig, cfg);
  REQUIRE(w.size() == 1);
  REQUIRE(w[0].size() == 16384);
  CHECK(std::count(w[0].begin(), w[0].end(), 0.0) == 6384);
  CHECK(std::all_of(w[0].begin(), w[0].begin() + 10000, [](double v) { return v == 1.0; }));

  CHECK_THROWS(segment(std::vector<double>{}, cfg));
}

TEST_CASE("segment count property") {
  const auto cfg = small_cfg();
  for (std::size_t n = 1; n < 3000; n += 37) {
    const auto starts = segment_starts(n, cfg);
    const std::size_t expect = n < cfg.outer_len ? 1 : (n - cfg.outer_len) / cfg.outer_hop + 1;
    REQUIRE(starts.size() == expect);
    for (std::size_t k = 0; k < starts.size(); ++k) CHECK(starts[k] == k * cfg.outer_hop);
  }
}

TEST_CASE("stft shape and the 8 Hz example") {
  const WindowingConfig cfg;
  const auto x = testing::sine(cfg.outer_len, 8.0, 64.0);
  const auto mag = stft_magnitude(x, cfg);
  REQUIRE(mag.rows() == 128);
  REQUIRE(mag.cols() == 256);
  for (std::size_t t = 2; t + 2 < mag.cols(); ++t) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < mag.rows(); ++f)
      if (mag(f, t) > mag(best, t)) best = f;
    REQUIRE(best == 32);
  }
}

TEST_CASE("stft matches a naive DFT oracle") {
  Rng rng(11);
  const auto cfg = small_cfg();
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = testing::random_vector(rng, cfg.outer_len);
    const auto got = stft_magnitude(x, cfg);
    const auto want = oracle_stft(x, cfg);
    REQUIRE(got.rows() == want.rows());
    REQUIRE(got.cols() == want.cols());
    for (std::size_t i = 0; i < got.data().size(); ++i) REQUIRE(std::abs(got.data()[i] - want.data()[i]) < 1e-9);
  }
}

TEST_CASE("stft: zeros in, zeros out; wrong length rejected") {
  const auto cfg = small_cfg();
  const auto mag = stft_magnitude(std::vector<double>(cfg.outer_len, 0.0), cfg);
  CHECK(std::all_of(mag.data().begin(), mag.data().end(), [](double v) { return v == 0.0; }));
  CHECK_THROWS(stft_magnitude(std::vector<double>(cfg.outer_len - 1, 0.0), cfg));
}

TEST_CASE("stft energy is monotone in amplitude") {
  Rng rng(12);
  const auto cfg = small_cfg();
  for (int trial = 0; trial < 20; ++trial) {
    auto x = testing::random_vector(rng, cfg.outer_len);
    auto energy = [&](const std::vector<double>& s) {
      double e = 0.0;
      for (double v : stft_magnitude(s, cfg).data()) e += v * v;
      return e;
    };
    const double e1 = energy(x);
    for (auto& v : x) v *= 2.0;
    CHECK(energy(x) >= e1);
  }
}

TEST_CASE("analysis window is periodic Hann") {
  const auto w = analysis_window(8, WindowFunction::Hann);
  CHECK(w[0] == 0.0);
  CHECK(w[4] == doctest::Approx(1.0));
  CHECK(w[2] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(w[7]));
}

TEST_CASE("normalized dB examples") {
  SUBCASE("constant maps to 0.5") {
    const auto d = to_normalized_db(Matrix<double>(3, 4, 2.5));
    CHECK(std::all_of(d.data().begin(), d.data().end(), [](double v) { return v == 0.5; }));
  }
  SUBCASE("two-value matrix hits both endpoints") {
    Matrix<double> m(2, 2, 0.0);
    m(1, 1) = 1.0;
    const auto d = to_normalized_db(m);
    CHECK(d(0, 0) == 0.0);
    CHECK(d(1, 1) == 1.0);
  }
  SUBCASE("random matrices span exactly [0, 1]") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
      Matrix<double> m(1 + rng.below(20), 1 + rng.below(20));
      for (auto& v : m.data()) v = std::pow(10.0, rng.uniform(-8, 3));
      if (m.data().size() < 2) continue;
      const auto d = to_normalized_db(m);
      const auto [lo, hi] = std::minmax_element(d.data().begin(), d.data().end());
      CHECK(*lo == 0.0);
      CHECK(*hi == 1.0);
    }
  }
  SUBCASE("monotone in magnitude") {
    Matrix<double> m(1, 5);
    m.data() = {0.0, 1e-3, 0.5, 2.0, 7.0};
    const auto d = to_normalized_db(m);
    CHECK(std::is_sorted(d.data().begin(), d.data().end()));
    CHECK(d.data()[2] == doctest::Approx((20 * std::log10(0.5 + 1e-10) - 20 * std::log10(1e-10)) /
                                          (20 * std::log10(7.0 + 1e-10) - 20 * std::log10(1e-10))));
  }
  SUBCASE("negative input rejected") {
    Matrix<double> m(1, 2, 1.0);
    m(0, 1) = -1.0;
    CHECK_THROWS(to_normalized_db(m));
  }
}

TEST_CASE("extract_all: one patient, 6-channel template, 2 active") {
  const WindowingConfig cfg;
  const auto h = harmonized("P", 6, 16384, {true, false, false, true, false, false}, 1);
  const auto windows = extract_all({h}, cfg);
  REQUIRE(windows.size() == 6);
  CHECK(std::count_if(windows.begin(), windows.end(), [](const auto& w) { return w.active; }) == 2);
  for (std::size_t c = 0; c < 6; ++c) {
    CHECK(windows[c].channel_index == c);
    CHECK(windows[c].values.rows() == 128);
    CHECK(windows[c].values.cols() == 256);
    if (!windows[c].active)
      CHECK(std::all_of(windows[c].values.data().begin(), windows[c].values.data().end(),
                        [](float v) { return v == 0.5f; }));
  }
}

TEST_CASE("extract_all: 20-patient 256 s synthetic set gives 20 x C spectrograms") {
  auto spec = dataset::default_synth_spec();
  spec.duration_s = 256.0;
  const auto ds = dataset::generate_synthetic(spec);
  const auto tmpl = preprocess::ChannelTemplate::from_labels(spec.channels);
  const auto h = preprocess::harmonize_all(ds.recordings, tmpl);
  const auto windows = extract_all(h, WindowingConfig{});
  CHECK(windows.size() == 20 * spec.channels.size());
  for (const auto& w : windows) {
    REQUIRE(w.active);
    const auto [lo, hi] = std::minmax_element(w.values.data().begin(), w.values.data().end());
    REQUIRE(*lo >= 0.0f);
    REQUIRE(*hi <= 1.0f);
  }
}

TEST_CASE("extract_all ordering, worker independence and cache transparency") {
  const auto cfg = small_cfg();
  std::vector<preprocess::HarmonizedRecording> recs;
  recs.push_back(harmonized("B", 3, 800, {true, true, false}, 1));
  recs.push_back(harmonized("A", 3, 700, {true, false, true}, 2));
  recs.push_back(harmonized("B", 3, 600, {true, true, true}, 3));
  recs[2].session_id = "t";

  const auto a = extract_all(recs, cfg, 1);
  const auto b = extract_all(recs, cfg, 3);
  REQUIRE(a.size() == b.size());
  // Patient B (first seen) precedes A; within a recording: window, then channel.
  CHECK(a.front().patient_id == "B");
  std::vector<std::string> order;
  for (const auto& w : a)
    if (order.empty() || order.back() != w.patient_id + w.session_id) order.push_back(w.patient_id + w.session_id);
  CHECK(order == std::vector<std::string>{"Bs", "Bt", "As"});
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].values == b[i].values);
    REQUIRE(a[i].channel_index == b[i].channel_index);
    REQUIRE(a[i].window_index == b[i].window_index);
  }
  // 800 samples: starts 0, 128, 256 -> 3 windows x 3 channels.
  CHECK(std::count_if(a.begin(), a.end(), [](const auto& w) { return w.session_id == "s" && w.patient_id == "B"; }) ==
        9);

  const auto dir = testing::temp_dir("spec_cache");
  const auto cold = extract_all(recs, cfg, 2, dir);
  CHECK(std::distance(std::filesystem::directory_iterator(dir), std::filesystem::directory_iterator{}) == 3);
  const auto warm = extract_all(recs, cfg, 2, dir);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(cold[i].values == a[i].values);
    REQUIRE(warm[i].values == a[i].values);
  }
  CHECK(cache_key(recs[0], cfg) != cache_key(recs[1], cfg));
  auto other = cfg;
  other.window = WindowFunction::Hamming;
  CHECK(cache_key(recs[0], cfg) != cache_key(recs[0], other));
}
