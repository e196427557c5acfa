#include "ncv/channel_template.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "ncv/errors.hpp"

namespace ncv::preprocess {
namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

struct PrefixInfo {
  const char* region;
  int rank;  // front-to-back position, used to break ties inside a region
};

const std::map<std::string, PrefixInfo>& prefixes() {
  static const std::map<std::string, PrefixInfo> table = {
      {"FP", {"frontal", 0}},          {"AF", {"frontal", 1}},          {"F", {"frontal", 2}},
      {"FT", {"temporal", 3}},         {"FC", {"fronto-central", 4}},   {"T", {"temporal", 5}},
      {"C", {"central", 6}},           {"TP", {"temporal", 7}},         {"CP", {"centro-parietal", 8}},
      {"P", {"parietal", 9}},          {"PO", {"parieto-occipital", 10}}, {"O", {"occipital", 11}},
      {"I", {"occipital", 12}},
  };
  return table;
}

int region_rank(const std::string& region) {
  const auto& order = region_order();
  return static_cast<int>(std::find(order.begin(), order.end(), region) - order.begin());
}

auto sort_key(const ChannelInfo& c) {
  const int hemi = c.hemisphere == Hemisphere::Left ? 0 : c.hemisphere == Hemisphere::Midline ? 1 : 2;
  const int prefix_rank = prefixes().at(upper(c.label.substr(0, c.label.find_first_of("0123456789zZ")))).rank;
  return std::make_tuple(region_rank(c.region), hemi, c.number, prefix_rank);
}

}  // namespace

std::string_view to_string(Hemisphere h) {
  switch (h) {
    case Hemisphere::Left:
      return "left";
    case Hemisphere::Midline:
      return "midline";
    case Hemisphere::Right:
      return "right";
  }
  return "?";
}

const std::vector<std::string>& region_order() {
  static const std::vector<std::string> order = {"frontal",         "fronto-central", "central",
                                                 "temporal",        "centro-parietal", "parietal",
                                                 "parieto-occipital", "occipital"};
  return order;
}

ChannelInfo parse_label(std::string_view label) {
  const std::size_t split = label.find_first_of("0123456789zZ");
  if (split == 0 || split == std::string_view::npos)
    throw UnmappableLabelError("cannot parse channel label '" + std::string(label) + "'");
  const std::string prefix = upper(label.substr(0, split));
  const auto it = prefixes().find(prefix);
  if (it == prefixes().end())
    throw UnmappableLabelError("channel label '" + std::string(label) + "' has no known region");

  ChannelInfo info;
  info.label = std::string(label);
  info.region = it->second.region;
  const std::string_view tail = label.substr(split);
  if (tail == "z" || tail == "Z") {
    info.hemisphere = Hemisphere::Midline;
    info.number = 0;
    return info;
  }
  if (!std::all_of(tail.begin(), tail.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
    throw UnmappableLabelError("channel label '" + std::string(label) + "' has a malformed electrode number");
  info.number = std::stoi(std::string(tail));
  if (info.number == 0) throw UnmappableLabelError("channel label '" + std::string(label) + "' has number 0");
  info.hemisphere = info.number % 2 == 1 ? Hemisphere::Left : Hemisphere::Right;
  return info;
}

std::string canonical_label(std::string_view raw) {
  std::string s(raw);
  auto trim = [](std::string& x) {
    const auto b = x.find_first_not_of(" \t");
    const auto e = x.find_last_not_of(" \t");
    x = b == std::string::npos ? std::string() : x.substr(b, e - b + 1);
  };
  trim(s);
  std::string u = upper(s);
  if (u.rfind("EEG ", 0) == 0) {
    s = s.substr(4);
    trim(s);
    u = upper(s);
  }
  for (const char* suffix : {"-REF", "-LE", "-AVG", "-A1", "-A2", "-M1", "-M2"}) {
    const std::string suf(suffix);
    if (u.size() > suf.size() && u.compare(u.size() - suf.size(), suf.size(), suf) == 0) {
      s.resize(s.size() - suf.size());
      u.resize(u.size() - suf.size());
      break;
    }
  }
  static const std::map<std::string, std::string> legacy = {{"T3", "T7"}, {"T4", "T8"}, {"T5", "P7"}, {"T6", "P8"}};
  if (const auto it = legacy.find(u); it != legacy.end()) return it->second;
  return s;
}

ChannelTemplate ChannelTemplate::from_labels(const std::vector<std::string>& labels) {
  ChannelTemplate t;
  for (const auto& l : labels) t.channels_.push_back(parse_label(l));
  std::stable_sort(t.channels_.begin(), t.channels_.end(),
                   [](const ChannelInfo& a, const ChannelInfo& b) { return sort_key(a) < sort_key(b); });
  for (std::size_t i = 0; i < t.channels_.size(); ++i) {
    const std::string key = upper(canonical_label(t.channels_[i].label));
    if (!t.lookup_.emplace(key, i).second)
      throw DataError("template lists channel '" + t.channels_[i].label + "' twice");
  }
  return t;
}

std::vector<std::string> ChannelTemplate::labels() const {
  std::vector<std::string> out;
  out.reserve(channels_.size());
  for (const auto& c : channels_) out.push_back(c.label);
  return out;
}

std::optional<std::size_t> ChannelTemplate::index_of(std::string_view label) const {
  const auto it = lookup_.find(upper(canonical_label(label)));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

ChannelTemplate load_template(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingFileError("cannot open template " + path.string());
  std::vector<std::tuple<long, std::string, std::string, std::string>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 4)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected index,label,region,hemisphere");
    long index = 0;
    try {
      index = std::stol(fields[0]);
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad index '" + fields[0] + "'");
    }
    rows.emplace_back(index, fields[1], fields[2], fields[3]);
  }

  const long n = static_cast<long>(rows.size());
  std::vector<std::string> by_index(rows.size());
  std::vector<bool> seen(rows.size(), false);
  for (const auto& [index, label, region, hemi] : rows) {
    if (index < 0 || index >= n || seen[static_cast<std::size_t>(index)])
      throw DataError(path.string() + ": indices must be a bijection onto 0.." + std::to_string(n - 1));
    seen[static_cast<std::size_t>(index)] = true;
    const ChannelInfo info = parse_label(label);
    if (info.region != region || to_string(info.hemisphere) != hemi)
      throw DataError(path.string() + ": channel '" + label + "' should be " + info.region + "/" +
                      std::string(to_string(info.hemisphere)));
    by_index[static_cast<std::size_t>(index)] = label;
  }

  ChannelTemplate t = ChannelTemplate::from_labels(by_index);
  if (t.labels() != by_index)
    throw DataError(path.string() + ": channel order does not follow the montage ordering rules");
  return t;
}

void write_template(const ChannelTemplate& t, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& c = t.channels()[i];
    os << i << ',' << c.label << ',' << c.region << ',' << to_string(c.hemisphere) << '\n';
  }
  if (!os) throw DataError("write failed for " + path.string());
}

ChannelTemplate default_template() {
  return load_template(std::filesystem::path(NCV_DATA_DIR) / "montage64.csv");
}

}  // namespace ncv::preprocess
