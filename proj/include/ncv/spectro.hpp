#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncv/dataset.hpp"
#include "ncv/matrix.hpp"
#include "ncv/preprocess.hpp"

namespace ncv::spectro {

enum class WindowFunction { Hann, Hamming, Rectangular };

struct WindowingConfig {
  std::size_t outer_len = 16384;  // 256 s at 64 Hz
  std::size_t outer_hop = 4096;
  std::size_t n_fft = 256;
  std::size_t stft_hop = 64;
  double db_floor_eps = 1e-10;
  WindowFunction window = WindowFunction::Hann;

  std::size_t freq_bins() const { return n_fft / 2; }
  std::size_t time_bins() const { return outer_len / stft_hop; }
};

/// Throws ConfigError on non-positive sizes, hop > length, or odd n_fft.
void validate(const WindowingConfig& cfg);

/// One channel's normalized-dB spectrogram of one outer window.
struct SpectrogramWindow {
  std::string patient_id;
  std::string session_id;
  std::string origin_tag;
  dataset::Diagnosis diagnosis = dataset::Diagnosis::Control;
  std::size_t channel_index = 0;
  std::size_t window_index = 0;
  std::size_t sample_start = 0;  // first sample of the outer window in its recording
  std::size_t sample_len = 0;
  bool active = false;
  Matrix<float> values;  // [F x T], entries in [0, 1]

  int label() const { return dataset::label_of(diagnosis); }
};

/// Start offsets of the outer windows for a signal of length n (n >= 1).
std::vector<std::size_t> segment_starts(std::size_t n, const WindowingConfig& cfg);

/// Fixed-length outer windows. A signal shorter than outer_len yields one
/// zero-padded window; trailing samples short of a full window are dropped.
std::vector<std::vector<double>> segment(std::span<const double> signal, const WindowingConfig& cfg);

std::vector<double> analysis_window(std::size_t n, WindowFunction fn);

/// |STFT| over centered frames: the window is zero-padded by n_fft/2 on both
/// edges and frame i starts at i*stft_hop of the padded signal. Bins
/// 0..n_fft/2-1 are kept. Result is [F x T].
Matrix<double> stft_magnitude(std::span<const double> window, const WindowingConfig& cfg);

/// 20*log10(mag + eps), then min-max scaled to [0, 1]; a constant input maps
/// to 0.5 everywhere.
Matrix<double> to_normalized_db(const Matrix<double>& mag, double eps = 1e-10);

/// One spectrogram per (recording window, template channel), ordered by
/// patient (first appearance), session, window, channel. If `cache_dir` is
/// set, per-recording results are reused from / stored to that directory.
std::vector<SpectrogramWindow> extract_all(const std::vector<preprocess::HarmonizedRecording>& recs,
                                           const WindowingConfig& cfg, unsigned workers = 0,
                                           const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

// Spectrogram cache: one blob per harmonized recording, keyed by a hash of
// its content and the windowing configuration.
std::string cache_key(const preprocess::HarmonizedRecording& rec, const WindowingConfig& cfg);
std::optional<std::vector<Matrix<float>>> cache_load(const std::filesystem::path& dir, const std::string& key,
                                                     std::size_t expected_count, std::size_t rows,
                                                     std::size_t cols);
void cache_store(const std::filesystem::path& dir, const std::string& key, const std::vector<Matrix<float>>& blobs);

}  // namespace ncv::spectro
