#include "ncv/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "ncv/errors.hpp"

namespace ncv::dataset {
namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary recording I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'N', 'C', 'V', '1'};

template <class T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& is, const fs::path& path) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw DataError("truncated recording header in " + path.string());
  return value;
}

std::string describe(const ManifestEntry& e, std::size_t index) {
  std::ostringstream os;
  os << "manifest entry #" << index << " (patient '" << e.patient_id << "', session '" << e.session_id
     << "', path '" << e.path << "')";
  return os.str();
}

}  // namespace

Diagnosis diagnosis_from_label(int label) {
  if (label == 0) return Diagnosis::Control;
  if (label == 1) return Diagnosis::Parkinson;
  throw DataError("diagnosis must be 0 (control) or 1 (PD), got " + std::to_string(label));
}

void validate(const Recording& rec) {
  if (rec.channel_labels.size() != rec.n_channels())
    throw ChannelCountMismatchError("recording " + rec.patient_id + "/" + rec.session_id + " has " +
                                    std::to_string(rec.n_channels()) + " channel rows but " +
                                    std::to_string(rec.channel_labels.size()) + " labels");
  std::set<std::string> seen;
  for (const auto& label : rec.channel_labels)
    if (!seen.insert(label).second)
      throw DataError("recording " + rec.patient_id + "/" + rec.session_id + " repeats channel label '" + label +
                      "'");
  if (!(rec.sample_rate_hz > 0.0))
    throw DataError("recording " + rec.patient_id + "/" + rec.session_id + " has non-positive sample rate");
  if (rec.n_samples() < 1)
    throw DataError("recording " + rec.patient_id + "/" + rec.session_id + " has no samples");
}

void write_recording_binary(const Recording& rec, const fs::path& path) {
  validate(rec);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(rec.n_channels()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(rec.n_samples()));
  put<double>(os, rec.sample_rate_hz);
  os.write(reinterpret_cast<const char*>(rec.samples.data().data()),
           static_cast<std::streamsize>(rec.samples.data().size() * sizeof(float)));
  if (!os) throw DataError("write failed for " + path.string());
}

RawSignal read_recording_binary(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingFileError("cannot open recording " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("bad magic in " + path.string() + " (expected NCV1)");
  const auto n_channels = get<std::uint32_t>(is, path);
  const auto n_samples = get<std::uint64_t>(is, path);
  RawSignal out;
  out.sample_rate_hz = get<double>(is, path);
  if (n_channels == 0 || n_samples == 0) throw DataError("empty recording " + path.string());
  out.samples = Matrix<float>(n_channels, n_samples);
  auto& data = out.samples.data();
  if (!is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float))))
    throw DataError("truncated sample data in " + path.string());
  return out;
}

DatasetManifest read_manifest(const fs::path& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw MissingFileError("cannot open manifest " + manifest_path.string());
  json j;
  try {
    j = json::parse(is);
    DatasetManifest m;
    m.dataset_name = j.value("dataset_name", "");
    m.origin_tag = j.value("origin_tag", "");
    for (const auto& r : j.at("recordings")) {
      ManifestEntry e;
      e.path = r.at("path").get<std::string>();
      e.patient_id = r.at("patient_id").get<std::string>();
      e.session_id = r.at("session_id").get<std::string>();
      e.diagnosis = diagnosis_from_label(r.at("diagnosis").get<int>());
      e.sample_rate_hz = r.at("sample_rate_hz").get<double>();
      e.channel_labels = r.at("channel_labels").get<std::vector<std::string>>();
      e.origin_tag = r.value("origin_tag", "");
      m.recordings.push_back(std::move(e));
    }
    return m;
  } catch (const json::exception& ex) {
    throw DataError("malformed manifest " + manifest_path.string() + ": " + ex.what());
  }
}

void write_manifest(const DatasetManifest& manifest, const fs::path& manifest_path) {
  json recs = json::array();
  for (const auto& e : manifest.recordings) {
    json r = {{"path", e.path},
              {"patient_id", e.patient_id},
              {"session_id", e.session_id},
              {"diagnosis", label_of(e.diagnosis)},
              {"sample_rate_hz", e.sample_rate_hz},
              {"channel_labels", e.channel_labels}};
    if (!e.origin_tag.empty()) r["origin_tag"] = e.origin_tag;
    recs.push_back(std::move(r));
  }
  json j = {{"dataset_name", manifest.dataset_name}, {"origin_tag", manifest.origin_tag}, {"recordings", recs}};
  std::ofstream os(manifest_path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + manifest_path.string() + " for writing");
  os << j.dump(2) << '\n';
}

std::vector<Recording> load_dataset(const fs::path& manifest_path) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();

  std::set<std::pair<std::string, std::string>> keys;
  for (std::size_t i = 0; i < manifest.recordings.size(); ++i) {
    const auto& e = manifest.recordings[i];
    if (!keys.emplace(e.patient_id, e.session_id).second)
      throw DuplicateEntryError("duplicate (patient_id, session_id) at " + describe(e, i));
  }

  std::vector<Recording> out;
  out.reserve(manifest.recordings.size());
  for (std::size_t i = 0; i < manifest.recordings.size(); ++i) {
    const auto& e = manifest.recordings[i];
    const fs::path file = base / e.path;
    if (!fs::exists(file)) throw MissingFileError("missing recording file for " + describe(e, i));
    RawSignal raw = read_recording_binary(file);
    if (raw.samples.rows() != e.channel_labels.size())
      throw ChannelCountMismatchError(describe(e, i) + ": file has " + std::to_string(raw.samples.rows()) +
                                      " channels, manifest lists " + std::to_string(e.channel_labels.size()) +
                                      " labels");
    if (raw.sample_rate_hz != e.sample_rate_hz)
      throw DataError(describe(e, i) + ": sample rate in file differs from manifest");

    Recording rec;
    rec.patient_id = e.patient_id;
    rec.session_id = e.session_id;
    rec.diagnosis = e.diagnosis;
    rec.sample_rate_hz = raw.sample_rate_hz;
    rec.channel_labels = e.channel_labels;
    rec.samples = std::move(raw.samples);
    rec.source_file = file.string();
    rec.origin_tag = e.origin_tag.empty() ? manifest.origin_tag : e.origin_tag;
    try {
      validate(rec);
    } catch (const DataError& ex) {
      throw DataError(describe(e, i) + ": " + ex.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<Recording> load_datasets(const std::vector<fs::path>& manifest_paths) {
  std::vector<Recording> all;
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& p : manifest_paths) {
    for (auto& rec : load_dataset(p)) {
      if (!keys.emplace(rec.patient_id, rec.session_id).second)
        throw DuplicateEntryError("patient '" + rec.patient_id + "' session '" + rec.session_id +
                                  "' appears in more than one manifest (" + p.string() + ")");
      all.push_back(std::move(rec));
    }
  }
  return all;
}

fs::path write_dataset(const std::vector<Recording>& recs, const fs::path& dir, const std::string& dataset_name,
                       const std::string& origin_tag) {
  fs::create_directories(dir / "recordings");
  DatasetManifest manifest;
  manifest.dataset_name = dataset_name;
  manifest.origin_tag = origin_tag;
  for (const auto& rec : recs) {
    const std::string rel = "recordings/" + rec.patient_id + "_" + rec.session_id + ".ncv";
    write_recording_binary(rec, dir / rel);
    ManifestEntry e;
    e.path = rel;
    e.patient_id = rec.patient_id;
    e.session_id = rec.session_id;
    e.diagnosis = rec.diagnosis;
    e.sample_rate_hz = rec.sample_rate_hz;
    e.channel_labels = rec.channel_labels;
    if (rec.origin_tag != origin_tag) e.origin_tag = rec.origin_tag;
    manifest.recordings.push_back(std::move(e));
  }
  const fs::path manifest_path = dir / "manifest.json";
  write_manifest(manifest, manifest_path);
  return manifest_path;
}

}  // namespace ncv::dataset
