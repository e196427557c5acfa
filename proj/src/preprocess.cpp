#include "ncv/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "ncv/errors.hpp"
#include "ncv/fft.hpp"
#include "ncv/parallel.hpp"

namespace ncv::preprocess {

std::vector<double> resample(std::span<const double> signal, double from_hz, double to_hz) {
  if (!(from_hz > 0.0) || !(to_hz > 0.0)) throw std::invalid_argument("resample: rates must be positive");
  if (!std::all_of(signal.begin(), signal.end(), [](double v) { return std::isfinite(v); }))
    throw DataError("resample: signal contains non-finite samples");
  if (from_hz == to_hz || signal.empty()) return {signal.begin(), signal.end()};

  const std::size_t n_in = signal.size();
  const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * to_hz / from_hz));
  if (n_out == 0) throw DataError("resample: output would be empty");
  if (n_out == n_in) return {signal.begin(), signal.end()};

  const RealFft fwd(n_in);
  std::vector<std::complex<double>> in_spec(fwd.bins());
  fwd.forward(signal, in_spec);

  const RealFft inv(n_out);
  std::vector<std::complex<double>> out_spec(inv.bins(), 0.0);
  const std::size_t shorter = std::min(n_in, n_out);
  const std::size_t keep = shorter / 2 + 1;
  std::copy_n(in_spec.begin(), keep, out_spec.begin());

  // The shared Nyquist bin of an even-length shorter side carries the
  // energy of the +/- N/2 pair; fold or split it so the real signal keeps
  // its amplitude.
  if (shorter % 2 == 0) {
    const std::size_t nyq = shorter / 2;
    if (n_out < n_in)
      out_spec[nyq] *= 2.0;
    else
      out_spec[nyq] *= 0.5;
  }

  std::vector<double> out(n_out);
  inv.inverse(out_spec, out);
  const double scale = 1.0 / static_cast<double>(n_in);
  for (auto& v : out) v *= scale;
  return out;
}

Standardized standardize(std::span<const double> signal) {
  if (signal.size() < 2) throw std::invalid_argument("standardize: need at least two samples");
  const double n = static_cast<double>(signal.size());
  double sum = 0.0;
  double peak = 0.0;
  for (double v : signal) {
    sum += v;
    peak = std::max(peak, std::abs(v));
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : signal) ss += (v - mean) * (v - mean);
  const double sigma = std::sqrt(ss / n);

  Standardized out;
  out.values.assign(signal.size(), 0.0);
  if (!(sigma > 1e-12 * std::max(1.0, peak))) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < signal.size(); ++i) out.values[i] = (signal[i] - mean) / sigma;
  return out;
}

std::vector<double> unit_amplitude(std::span<const double> signal) {
  double peak = 0.0;
  for (double v : signal) peak = std::max(peak, std::abs(v));
  std::vector<double> out(signal.begin(), signal.end());
  if (peak == 0.0) return out;
  for (auto& v : out) v /= peak;
  // Division by the peak gives exactly +/-1 at the peak sample.
  return out;
}

HarmonizedRecording harmonize(const dataset::Recording& rec, const ChannelTemplate& tmpl, double target_hz) {
  dataset::validate(rec);
  HarmonizedRecording out;
  out.patient_id = rec.patient_id;
  out.session_id = rec.session_id;
  out.diagnosis = rec.diagnosis;
  out.origin_tag = rec.origin_tag;
  out.sample_rate_hz = target_hz;

  std::vector<std::size_t> rows(rec.n_channels());
  std::vector<bool> taken(tmpl.size(), false);
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    const auto idx = tmpl.index_of(rec.channel_labels[c]);
    if (!idx)
      throw UnmappableLabelError("recording " + rec.patient_id + "/" + rec.session_id + ": channel '" +
                                 rec.channel_labels[c] + "' is not in the template");
    if (taken[*idx])
      throw DataError("recording " + rec.patient_id + "/" + rec.session_id + ": channel '" + rec.channel_labels[c] +
                      "' maps onto template slot " + tmpl.label(*idx) + " already filled by another label");
    taken[*idx] = true;
    rows[c] = *idx;
  }

  const auto n_out =
      static_cast<std::size_t>(std::llround(static_cast<double>(rec.n_samples()) * target_hz / rec.sample_rate_hz));
  out.data = Matrix<double>(tmpl.size(), n_out, 0.0);
  out.active_mask.assign(tmpl.size(), false);
  out.degenerate.assign(tmpl.size(), false);

  std::vector<double> raw(rec.n_samples());
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    const auto src = rec.samples.row(c);
    std::copy(src.begin(), src.end(), raw.begin());
    const auto resampled = resample(raw, rec.sample_rate_hz, target_hz);
    const auto z = standardize(resampled);
    const std::size_t r = rows[c];
    if (z.degenerate) {
      out.degenerate[r] = true;
      continue;
    }
    const auto unit = unit_amplitude(z.values);
    std::copy(unit.begin(), unit.end(), out.data.row(r).begin());
    out.active_mask[r] = true;
  }
  return out;
}

std::vector<HarmonizedRecording> harmonize_all(const std::vector<dataset::Recording>& recs,
                                               const ChannelTemplate& tmpl, unsigned workers) {
  std::vector<HarmonizedRecording> out(recs.size());
  parallel_for(recs.size(), workers, [&](std::size_t i) { out[i] = harmonize(recs[i], tmpl); });
  return out;
}

}  // namespace ncv::preprocess
