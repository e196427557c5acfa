#include "ncv/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <numeric>

#include "ncv/errors.hpp"
#include "ncv/fft.hpp"
#include "ncv/parallel.hpp"

namespace ncv::spectro {

void validate(const WindowingConfig& cfg) {
  if (cfg.outer_len == 0 || cfg.outer_hop == 0 || cfg.n_fft == 0 || cfg.stft_hop == 0)
    throw ConfigError("windowing sizes must be positive");
  if (cfg.outer_hop > cfg.outer_len) throw ConfigError("outer_hop must not exceed outer_len");
  if (cfg.stft_hop > cfg.n_fft) throw ConfigError("stft_hop must not exceed n_fft");
  if (cfg.n_fft % 2 != 0) throw ConfigError("n_fft must be even");
  if (cfg.time_bins() == 0) throw ConfigError("outer_len must hold at least one STFT hop");
  if (!(cfg.db_floor_eps > 0.0)) throw ConfigError("db_floor_eps must be positive");
}

std::vector<std::size_t> segment_starts(std::size_t n, const WindowingConfig& cfg) {
  if (n == 0) throw std::invalid_argument("segment: empty signal");
  if (n < cfg.outer_len) return {0};
  const std::size_t count = (n - cfg.outer_len) / cfg.outer_hop + 1;
  std::vector<std::size_t> starts(count);
  for (std::size_t k = 0; k < count; ++k) starts[k] = k * cfg.outer_hop;
  return starts;
}

std::vector<std::vector<double>> segment(std::span<const double> signal, const WindowingConfig& cfg) {
  std::vector<std::vector<double>> out;
  for (std::size_t start : segment_starts(signal.size(), cfg)) {
    std::vector<double> w(cfg.outer_len, 0.0);
    const std::size_t avail = std::min(cfg.outer_len, signal.size() - start);
    std::copy_n(signal.begin() + static_cast<std::ptrdiff_t>(start), avail, w.begin());
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<double> analysis_window(std::size_t n, WindowFunction fn) {
  std::vector<double> w(n, 1.0);
  // Periodic (DFT-even) forms.
  for (std::size_t k = 0; k < n; ++k) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    switch (fn) {
      case WindowFunction::Hann:
        w[k] = 0.5 - 0.5 * std::cos(phase);
        break;
      case WindowFunction::Hamming:
        w[k] = 0.54 - 0.46 * std::cos(phase);
        break;
      case WindowFunction::Rectangular:
        break;
    }
  }
  return w;
}

namespace {

Matrix<double> stft_with(const RealFft& fft, std::span<const double> taper, std::span<const double> window,
                         const WindowingConfig& cfg) {
  const std::size_t n_fft = cfg.n_fft;
  const std::size_t half = n_fft / 2;
  const std::size_t F = cfg.freq_bins();
  const std::size_t T = cfg.time_bins();
  Matrix<double> mag(F, T);
  std::vector<double> frame(n_fft);
  std::vector<std::complex<double>> spec(fft.bins());
  for (std::size_t i = 0; i < T; ++i) {
    // Padded index p maps to window index p - half.
    const std::size_t p0 = i * cfg.stft_hop;
    for (std::size_t k = 0; k < n_fft; ++k) {
      const std::size_t p = p0 + k;
      const double x = (p >= half && p - half < window.size()) ? window[p - half] : 0.0;
      frame[k] = x * taper[k];
    }
    fft.forward(frame, spec);
    for (std::size_t f = 0; f < F; ++f) mag(f, i) = std::abs(spec[f]);
  }
  return mag;
}

}  // namespace

Matrix<double> stft_magnitude(std::span<const double> window, const WindowingConfig& cfg) {
  validate(cfg);
  if (window.size() != cfg.outer_len)
    throw std::invalid_argument("stft_magnitude: window length " + std::to_string(window.size()) + " != outer_len " +
                                std::to_string(cfg.outer_len));
  const RealFft fft(cfg.n_fft);
  const auto taper = analysis_window(cfg.n_fft, cfg.window);
  return stft_with(fft, taper, window, cfg);
}

Matrix<double> to_normalized_db(const Matrix<double>& mag, double eps) {
  Matrix<double> out(mag.rows(), mag.cols());
  const auto& in = mag.data();
  auto& d = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!(in[i] >= 0.0)) throw std::invalid_argument("to_normalized_db: negative or non-finite magnitude");
    d[i] = 20.0 * std::log10(in[i] + eps);
  }
  if (d.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(d.begin(), d.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    std::fill(d.begin(), d.end(), 0.5);
    return out;
  }
  const double span = hi - lo;
  // Rounded subtraction is monotone and x/x == 1, so the extremes land on
  // exactly 0 and 1.
  for (auto& v : d) v = (v - lo) / span;
  return out;
}

std::vector<SpectrogramWindow> extract_all(const std::vector<preprocess::HarmonizedRecording>& recs,
                                           const WindowingConfig& cfg, unsigned workers,
                                           const std::optional<std::filesystem::path>& cache_dir) {
  validate(cfg);

  // Recordings grouped by patient in order of first appearance.
  std::map<std::string, std::size_t> first_seen;
  for (std::size_t i = 0; i < recs.size(); ++i) first_seen.try_emplace(recs[i].patient_id, i);
  std::vector<std::size_t> order(recs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return first_seen.at(recs[a].patient_id) < first_seen.at(recs[b].patient_id);
  });

  std::vector<std::vector<std::size_t>> starts(recs.size());
  std::vector<std::size_t> offset(recs.size() + 1, 0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& rec = recs[order[k]];
    starts[k] = segment_starts(rec.n_samples(), cfg);
    offset[k + 1] = offset[k] + starts[k].size() * rec.n_channels();
  }

  std::vector<SpectrogramWindow> out(offset.back());
  const RealFft fft(cfg.n_fft);
  const auto taper = analysis_window(cfg.n_fft, cfg.window);
  const std::size_t F = cfg.freq_bins();
  const std::size_t T = cfg.time_bins();

  parallel_for(order.size(), workers, [&](std::size_t k) {
    const auto& rec = recs[order[k]];
    const std::size_t C = rec.n_channels();
    const std::size_t n_windows = starts[k].size();

    std::optional<std::vector<Matrix<float>>> cached;
    std::string key;
    if (cache_dir) {
      key = cache_key(rec, cfg);
      cached = cache_load(*cache_dir, key, n_windows * C, F, T);
    }

    std::vector<Matrix<float>> computed;
    if (!cached) computed.reserve(n_windows * C);
    for (std::size_t w = 0; w < n_windows; ++w) {
      for (std::size_t c = 0; c < C; ++c) {
        auto& sw = out[offset[k] + w * C + c];
        sw.patient_id = rec.patient_id;
        sw.session_id = rec.session_id;
        sw.origin_tag = rec.origin_tag;
        sw.diagnosis = rec.diagnosis;
        sw.channel_index = c;
        sw.window_index = w;
        sw.sample_start = starts[k][w];
        sw.sample_len = cfg.outer_len;
        sw.active = rec.active_mask[c];
        if (cached) {
          sw.values = std::move((*cached)[w * C + c]);
          continue;
        }
        std::vector<double> window(cfg.outer_len, 0.0);
        const auto row = rec.data.row(c);
        const std::size_t avail = std::min(cfg.outer_len, row.size() - starts[k][w]);
        std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(starts[k][w]), avail, window.begin());
        const auto db = to_normalized_db(stft_with(fft, taper, window, cfg), cfg.db_floor_eps);
        sw.values = Matrix<float>(F, T);
        std::transform(db.data().begin(), db.data().end(), sw.values.data().begin(),
                       [](double v) { return static_cast<float>(v); });
        if (cache_dir) computed.push_back(sw.values);
      }
    }
    if (cache_dir && !cached) cache_store(*cache_dir, key, computed);
  });
  return out;
}

}  // namespace ncv::spectro
