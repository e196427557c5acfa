#pragma once

#include <span>
#include <string>
#include <vector>

#include "ncv/channel_template.hpp"
#include "ncv/dataset.hpp"
#include "ncv/matrix.hpp"

namespace ncv::preprocess {

inline constexpr double kTargetRateHz = 64.0;

/// FFT-domain resampling to round(n * to_hz / from_hz) samples. The spectrum
/// is truncated or zero-extended, so everything below min(from, to)/2 is
/// kept. Equal rates return an identical copy.
std::vector<double> resample(std::span<const double> signal, double from_hz, double to_hz = kTargetRateHz);

struct Standardized {
  std::vector<double> values;
  bool degenerate = false;  // input was constant; values are all zero
};

/// Zero mean, unit population standard deviation.
Standardized standardize(std::span<const double> signal);

/// Divides by max |x|; an all-zero input is returned unchanged.
std::vector<double> unit_amplitude(std::span<const double> signal);

struct HarmonizedRecording {
  std::string patient_id;
  std::string session_id;
  dataset::Diagnosis diagnosis = dataset::Diagnosis::Control;
  std::string origin_tag;
  double sample_rate_hz = kTargetRateHz;
  Matrix<double> data;              // [C x n_samples]
  std::vector<bool> active_mask;    // channel supplied and not degenerate
  std::vector<bool> degenerate;     // channel supplied but constant

  std::size_t n_channels() const { return data.rows(); }
  std::size_t n_samples() const { return data.cols(); }
};

/// Per channel: resample -> standardize -> unit_amplitude, written to row
/// index_of(label). Channels the recording lacks stay zero and inactive.
HarmonizedRecording harmonize(const dataset::Recording& rec, const ChannelTemplate& tmpl,
                              double target_hz = kTargetRateHz);

std::vector<HarmonizedRecording> harmonize_all(const std::vector<dataset::Recording>& recs,
                                               const ChannelTemplate& tmpl, unsigned workers = 0);

}  // namespace ncv::preprocess
