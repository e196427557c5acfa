#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ncv::preprocess {

enum class Hemisphere { Left, Midline, Right };

std::string_view to_string(Hemisphere h);

struct ChannelInfo {
  std::string label;
  std::string region;
  Hemisphere hemisphere = Hemisphere::Midline;
  int number = 0;  // 0 for midline labels
};

/// Regions in anterior-to-posterior order.
const std::vector<std::string>& region_order();

/// Splits a 10-10 label such as "FC3" or "POz" into region, hemisphere and
/// electrode number. Throws UnmappableLabelError for anything else.
ChannelInfo parse_label(std::string_view label);

/// Normalizes vendor spellings to the template's: case, "EEG " prefixes,
/// reference suffixes ("-REF", "-LE", ...) and legacy 10-20 names
/// (T3/T4/T5/T6 -> T7/T8/P7/P8).
std::string canonical_label(std::string_view raw);

/// Canonical montage: regions anterior to posterior; inside a region, left
/// (odd) electrodes, then midline ('z'), then right (even), each group by
/// ascending electrode number, then by prefix from front to back.
class ChannelTemplate {
 public:
  ChannelTemplate() = default;

  /// Orders an arbitrary label set by the montage rules.
  static ChannelTemplate from_labels(const std::vector<std::string>& labels);

  std::size_t size() const { return channels_.size(); }
  const std::vector<ChannelInfo>& channels() const { return channels_; }
  const std::string& label(std::size_t index) const { return channels_.at(index).label; }
  std::vector<std::string> labels() const;

  /// Template index of a recording label (aliases applied), if mapped.
  std::optional<std::size_t> index_of(std::string_view label) const;

 private:
  std::vector<ChannelInfo> channels_;
  std::unordered_map<std::string, std::size_t> lookup_;  // upper-cased canonical label -> index
};

/// Reads "index,label,region,hemisphere" lines ('#' starts a comment).
/// Rejects files whose indices are not a bijection onto 0..C-1 or disagree
/// with the montage ordering rules.
ChannelTemplate load_template(const std::filesystem::path& path);
void write_template(const ChannelTemplate& t, const std::filesystem::path& path);

/// The bundled 64-electrode superset (data/montage64.csv).
ChannelTemplate default_template();

}  // namespace ncv::preprocess
