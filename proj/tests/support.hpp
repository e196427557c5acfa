#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "ncv/rng.hpp"
#include "ncv/spectro.hpp"

namespace ncv::testing {

/// O(n^2) DFT magnitude of bins 0..n/2.
inline std::vector<double> naive_dft_magnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n));
    out[k] = std::abs(acc);
  }
  return out;
}

inline std::vector<double> sine(std::size_t n, double hz, double fs, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t)
    x[t] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(t) / fs + phase);
  return x;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(lo, hi);
  return x;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ncv_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// A window with provenance and a constant spectrogram of the given size.
inline spectro::SpectrogramWindow make_window(const std::string& patient, int label, std::size_t channel,
                                              std::size_t window_index = 0, std::size_t rows = 16,
                                              std::size_t cols = 16) {
  spectro::SpectrogramWindow w;
  w.patient_id = patient;
  w.session_id = "s";
  w.origin_tag = "o";
  w.diagnosis = label ? dataset::Diagnosis::Parkinson : dataset::Diagnosis::Control;
  w.channel_index = channel;
  w.window_index = window_index;
  w.sample_start = window_index * 100;
  w.sample_len = 100;
  w.active = true;
  w.values = Matrix<float>(rows, cols, 0.5f);
  return w;
}

}  // namespace ncv::testing
