#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncv/matrix.hpp"

namespace ncv::dataset {

enum class Diagnosis : std::uint8_t { Control = 0, Parkinson = 1 };

inline int label_of(Diagnosis d) { return static_cast<int>(d); }
Diagnosis diagnosis_from_label(int label);

/// One subject-session: raw multichannel signal plus metadata.
struct Recording {
  std::string patient_id;
  std::string session_id;
  Diagnosis diagnosis = Diagnosis::Control;
  double sample_rate_hz = 0.0;
  std::vector<std::string> channel_labels;
  Matrix<float> samples;  // [n_channels x n_samples]
  std::string source_file;
  std::string origin_tag;

  std::size_t n_channels() const { return samples.rows(); }
  std::size_t n_samples() const { return samples.cols(); }
};

/// Throws DataError when the recording breaks a structural invariant.
void validate(const Recording& rec);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::string patient_id;
  std::string session_id;
  Diagnosis diagnosis = Diagnosis::Control;
  double sample_rate_hz = 0.0;
  std::vector<std::string> channel_labels;
  std::string origin_tag;  // empty: inherit the manifest-level tag
};

struct DatasetManifest {
  std::string dataset_name;
  std::string origin_tag;
  std::vector<ManifestEntry> recordings;
};

DatasetManifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& manifest_path);

// Recording binary: "NCV1" | u32 n_channels | u64 n_samples | f64 rate |
// channel-major f32 samples, all little-endian.
struct RawSignal {
  double sample_rate_hz = 0.0;
  Matrix<float> samples;
};
void write_recording_binary(const Recording& rec, const std::filesystem::path& path);
RawSignal read_recording_binary(const std::filesystem::path& path);

/// Loads every recording of a manifest, in manifest order.
std::vector<Recording> load_dataset(const std::filesystem::path& manifest_path);

/// Loads several manifests and concatenates them (multi-site runs).
std::vector<Recording> load_datasets(const std::vector<std::filesystem::path>& manifest_paths);

/// Writes one binary per recording under dir/recordings and a manifest at
/// dir/manifest.json; returns the manifest path.
std::filesystem::path write_dataset(const std::vector<Recording>& recs, const std::filesystem::path& dir,
                                    const std::string& dataset_name, const std::string& origin_tag);

// ---------------------------------------------------------------------------
// Synthetic data

struct SynthSpec {
  int n_patients_per_class = 10;
  std::vector<std::string> channels;
  double sample_rate_hz = 64.0;
  double duration_s = 256.0;
  double signal_band_low_hz = 4.0;
  double signal_band_high_hz = 8.0;
  std::vector<std::string> discriminative_channels;
  double class_effect_size = 0.0;
  double idiosyncrasy_strength = 0.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
  /// Origin tags handed out round-robin over patient pairs, so every site
  /// receives both classes.
  std::vector<std::string> sites{"synthetic"};
};

/// Throws ConfigError naming the offending field.
void validate(const SynthSpec& spec);

/// The desk-scale default used by `ncv synth` without a spec file.
SynthSpec default_synth_spec();

struct GroundTruth {
  std::vector<std::string> planted_channels;
  double signal_band_low_hz = 0.0;
  double signal_band_high_hz = 0.0;
  std::map<std::string, double> signature_hz;  // patient -> idiosyncratic tone
  std::map<std::string, std::string> site_of;  // patient -> origin tag
};

struct SyntheticDataset {
  std::vector<Recording> recordings;
  GroundTruth truth;
};

/// Deterministic in spec.seed, independent of `workers`.
SyntheticDataset generate_synthetic(const SynthSpec& spec, unsigned workers = 0);

/// Missing keys keep their defaults; unknown keys are a ConfigError.
SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);
nlohmann::json to_json(const GroundTruth& truth);

}  // namespace ncv::dataset
