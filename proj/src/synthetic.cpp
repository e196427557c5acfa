#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <set>

#include "ncv/dataset.hpp"
#include "ncv/errors.hpp"
#include "ncv/fft.hpp"
#include "ncv/parallel.hpp"
#include "ncv/rng.hpp"

namespace ncv::dataset {
using nlohmann::json;

namespace {

// Stream ids for derive_seed; recordings use their patient index.
constexpr std::uint64_t kSignatureStream = 1ULL << 40;

/// Gaussian noise confined to [low, high] Hz with RMS exactly `rms`.
std::vector<double> band_limited_noise(Rng& rng, const RealFft& fft, double fs, double low, double high, double rms) {
  const std::size_t n = fft.size();
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  std::vector<std::complex<double>> spec(fft.bins());
  fft.forward(x, spec);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    if (f < low || f > high) spec[k] = 0.0;
  }
  fft.inverse(spec, x);
  double ss = 0.0;
  for (double v : x) ss += v * v;
  const double current = std::sqrt(ss / static_cast<double>(n));
  const double scale = current > 0.0 ? rms / current : 0.0;
  for (auto& v : x) v *= scale;
  return x;
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.n_patients_per_class < 1) throw ConfigError("n_patients_per_class must be >= 1");
  if (spec.channels.empty()) throw ConfigError("channels must not be empty");
  std::set<std::string> labels(spec.channels.begin(), spec.channels.end());
  if (labels.size() != spec.channels.size()) throw ConfigError("channels contains duplicate labels");
  if (!(spec.sample_rate_hz > 0.0)) throw ConfigError("sample_rate_hz must be positive");
  if (!(spec.duration_s > 0.0) || std::llround(spec.duration_s * spec.sample_rate_hz) < 1)
    throw ConfigError("duration_s must give at least one sample");
  const double nyquist = spec.sample_rate_hz / 2.0;
  if (!(spec.signal_band_low_hz > 0.0) || !(spec.signal_band_high_hz > spec.signal_band_low_hz) ||
      !(spec.signal_band_high_hz < nyquist))
    throw ConfigError("signal_band_hz must satisfy 0 < low < high < sample_rate_hz/2");
  for (const auto& c : spec.discriminative_channels)
    if (!labels.contains(c)) throw ConfigError("discriminative_channels: '" + c + "' is not in channels");
  if (!(spec.class_effect_size >= 0.0)) throw ConfigError("class_effect_size must be >= 0");
  if (!(spec.idiosyncrasy_strength >= 0.0)) throw ConfigError("idiosyncrasy_strength must be >= 0");
  if (!(spec.noise_sigma > 0.0)) throw ConfigError("noise_sigma must be > 0");
  if (spec.sites.empty()) throw ConfigError("sites must not be empty");
}

SynthSpec default_synth_spec() {
  SynthSpec s;
  s.n_patients_per_class = 10;
  s.channels = {"F3", "Fz", "F4", "C3", "Cz", "C4", "P3", "P4"};
  s.sample_rate_hz = 64.0;
  s.duration_s = 512.0;
  s.signal_band_low_hz = 4.0;
  s.signal_band_high_hz = 8.0;
  s.discriminative_channels = {"Fz", "Cz"};
  s.class_effect_size = 0.5;
  s.idiosyncrasy_strength = 2.0;
  s.noise_sigma = 1.0;
  s.seed = 20240917;
  s.sites = {"synthetic"};
  return s;
}

SyntheticDataset generate_synthetic(const SynthSpec& spec, unsigned workers) {
  validate(spec);
  const double fs = spec.sample_rate_hz;
  const auto n_samples = static_cast<std::size_t>(std::llround(spec.duration_s * fs));
  const int n_patients = 2 * spec.n_patients_per_class;

  // Signature tones sit on a grid of fs/256 Hz above the signal band, one
  // distinct grid point per patient. Patients 2k (PD) and 2k+1 (control)
  // share a pair of neighbouring tones, so tone frequency carries no class
  // information.
  const double step = fs / 256.0;
  const double nyquist = fs / 2.0;
  std::vector<double> candidates;
  for (double f = step; f < nyquist - 1.0 + 1e-12; f += step)
    if (f >= spec.signal_band_high_hz + 1.0) candidates.push_back(f);
  if (candidates.size() < static_cast<std::size_t>(n_patients))
    throw ConfigError("signal_band_hz leaves too little room for " + std::to_string(n_patients) +
                      " distinct signature frequencies");
  Rng sig_rng(derive_seed(spec.seed, kSignatureStream));
  sig_rng.shuffle(candidates);
  candidates.resize(static_cast<std::size_t>(n_patients));
  std::sort(candidates.begin(), candidates.end());
  std::vector<std::size_t> pair_order(static_cast<std::size_t>(spec.n_patients_per_class));
  for (std::size_t k = 0; k < pair_order.size(); ++k) pair_order[k] = k;
  sig_rng.shuffle(pair_order);
  std::vector<double> tones(static_cast<std::size_t>(n_patients));
  for (std::size_t k = 0; k < pair_order.size(); ++k) {
    const std::size_t swap = sig_rng.below(2);
    tones[2 * k] = candidates[2 * pair_order[k] + swap];
    tones[2 * k + 1] = candidates[2 * pair_order[k] + 1 - swap];
  }

  SyntheticDataset out;
  out.truth.planted_channels = spec.discriminative_channels;
  out.truth.signal_band_low_hz = spec.signal_band_low_hz;
  out.truth.signal_band_high_hz = spec.signal_band_high_hz;
  out.recordings.resize(static_cast<std::size_t>(n_patients));

  std::set<std::string> planted(spec.discriminative_channels.begin(), spec.discriminative_channels.end());
  RealFft fft(n_samples);

  for (int p = 0; p < n_patients; ++p) {
    char id[16];
    std::snprintf(id, sizeof id, "S%03d", p);
    auto& rec = out.recordings[static_cast<std::size_t>(p)];
    rec.patient_id = id;
    rec.session_id = "ses1";
    rec.diagnosis = (p % 2 == 0) ? Diagnosis::Parkinson : Diagnosis::Control;
    rec.sample_rate_hz = fs;
    rec.channel_labels = spec.channels;
    rec.origin_tag = spec.sites[static_cast<std::size_t>(p / 2) % spec.sites.size()];
    rec.source_file = "synthetic";
    out.truth.signature_hz[rec.patient_id] = tones[static_cast<std::size_t>(p)];
    out.truth.site_of[rec.patient_id] = rec.origin_tag;
  }

  parallel_for(out.recordings.size(), workers, [&](std::size_t p) {
    auto& rec = out.recordings[p];
    Rng rng(derive_seed(spec.seed, p));
    const double f_sig = tones[p];
    const bool is_pd = rec.diagnosis == Diagnosis::Parkinson;
    rec.samples = Matrix<float>(spec.channels.size(), n_samples);
    for (std::size_t c = 0; c < spec.channels.size(); ++c) {
      std::vector<double> x(n_samples);
      for (auto& v : x) v = spec.noise_sigma * rng.normal();
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      if (spec.idiosyncrasy_strength > 0.0) {
        for (std::size_t t = 0; t < n_samples; ++t)
          x[t] += spec.idiosyncrasy_strength *
                  std::sin(2.0 * std::numbers::pi * f_sig * static_cast<double>(t) / fs + phase);
      }
      if (is_pd && spec.class_effect_size > 0.0 && planted.contains(spec.channels[c])) {
        const auto band = band_limited_noise(rng, fft, fs, spec.signal_band_low_hz, spec.signal_band_high_hz,
                                             spec.class_effect_size);
        for (std::size_t t = 0; t < n_samples; ++t) x[t] += band[t];
      }
      auto row = rec.samples.row(c);
      for (std::size_t t = 0; t < n_samples; ++t) row[t] = static_cast<float>(x[t]);
    }
  });
  return out;
}

SynthSpec synth_spec_from_json(const json& j) {
  static const std::set<std::string> known = {
      "n_patients_per_class", "channels",          "sample_rate_hz",        "duration_s",
      "signal_band_hz",       "discriminative_channels", "class_effect_size", "idiosyncrasy_strength",
      "noise_sigma",          "seed",              "sites"};
  if (!j.is_object()) throw ConfigError("synth spec must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown synth spec key '" + key + "'");

  SynthSpec s = default_synth_spec();
  auto field = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(dst);
    } catch (const json::exception&) {
      throw ConfigError(std::string("synth spec field '") + key + "' has the wrong type");
    }
  };
  field("n_patients_per_class", s.n_patients_per_class);
  field("channels", s.channels);
  field("sample_rate_hz", s.sample_rate_hz);
  field("duration_s", s.duration_s);
  field("discriminative_channels", s.discriminative_channels);
  field("class_effect_size", s.class_effect_size);
  field("idiosyncrasy_strength", s.idiosyncrasy_strength);
  field("noise_sigma", s.noise_sigma);
  field("seed", s.seed);
  field("sites", s.sites);
  if (j.contains("signal_band_hz")) {
    std::vector<double> band;
    field("signal_band_hz", band);
    if (band.size() != 2) throw ConfigError("synth spec field 'signal_band_hz' must be [low, high]");
    s.signal_band_low_hz = band[0];
    s.signal_band_high_hz = band[1];
  }
  try {
    validate(s);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("invalid synth spec: ") + e.what());
  }
  return s;
}

json to_json(const SynthSpec& s) {
  return {{"n_patients_per_class", s.n_patients_per_class},
          {"channels", s.channels},
          {"sample_rate_hz", s.sample_rate_hz},
          {"duration_s", s.duration_s},
          {"signal_band_hz", {s.signal_band_low_hz, s.signal_band_high_hz}},
          {"discriminative_channels", s.discriminative_channels},
          {"class_effect_size", s.class_effect_size},
          {"idiosyncrasy_strength", s.idiosyncrasy_strength},
          {"noise_sigma", s.noise_sigma},
          {"seed", s.seed},
          {"sites", s.sites}};
}

json to_json(const GroundTruth& t) {
  json sig = json::object();
  for (const auto& [p, f] : t.signature_hz) sig[p] = f;
  json sites = json::object();
  for (const auto& [p, s] : t.site_of) sites[p] = s;
  return {{"planted_channels", t.planted_channels},
          {"signal_band_hz", {t.signal_band_low_hz, t.signal_band_high_hz}},
          {"signature_hz", sig},
          {"site_of", sites}};
}

}  // namespace ncv::dataset
