#include <cstdio>
#include <cstring>
#include <fstream>

#include "ncv/spectro.hpp"

namespace ncv::spectro {
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'N', 'C', 'V', 'S'};

class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001B3ULL;
    }
  }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

}  // namespace

std::string cache_key(const preprocess::HarmonizedRecording& rec, const WindowingConfig& cfg) {
  // Two independent FNV streams give a 128-bit key.
  Fnv1a a;
  Fnv1a b;
  b.value<std::uint64_t>(0x9E3779B97F4A7C15ULL);
  for (Fnv1a* h : {&a, &b}) {
    h->value(cfg.outer_len);
    h->value(cfg.outer_hop);
    h->value(cfg.n_fft);
    h->value(cfg.stft_hop);
    h->value(cfg.db_floor_eps);
    h->value(static_cast<int>(cfg.window));
    h->value(rec.n_channels());
    h->value(rec.n_samples());
    for (bool m : rec.active_mask) h->value(static_cast<unsigned char>(m));
    h->bytes(rec.data.data().data(), rec.data.data().size() * sizeof(double));
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(a.digest()),
                static_cast<unsigned long long>(b.digest()));
  return buf;
}

std::optional<std::vector<Matrix<float>>> cache_load(const fs::path& dir, const std::string& key,
                                                     std::size_t expected_count, std::size_t rows,
                                                     std::size_t cols) {
  std::ifstream is(dir / (key + ".ncvspec"), std::ios::binary);
  if (!is) return std::nullopt;
  char magic[4];
  std::uint64_t count = 0, r = 0, c = 0;
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) return std::nullopt;
  if (!is.read(reinterpret_cast<char*>(&count), 8) || !is.read(reinterpret_cast<char*>(&r), 8) ||
      !is.read(reinterpret_cast<char*>(&c), 8))
    return std::nullopt;
  if (count != expected_count || r != rows || c != cols) return std::nullopt;
  std::vector<Matrix<float>> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Matrix<float> m(rows, cols);
    if (!is.read(reinterpret_cast<char*>(m.data().data()), static_cast<std::streamsize>(rows * cols * sizeof(float))))
      return std::nullopt;
    out.push_back(std::move(m));
  }
  return out;
}

void cache_store(const fs::path& dir, const std::string& key, const std::vector<Matrix<float>>& blobs) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const std::uint64_t count = blobs.size();
  const std::uint64_t rows = blobs.empty() ? 0 : blobs.front().rows();
  const std::uint64_t cols = blobs.empty() ? 0 : blobs.front().cols();
  // Write to a private temp name, then rename, so concurrent readers never
  // see a partial blob. A failed store only costs a recomputation later.
  const fs::path final_path = dir / (key + ".ncvspec");
  const fs::path tmp = dir / (key + ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(&blobs)));
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) return;
    os.write(kMagic, 4);
    os.write(reinterpret_cast<const char*>(&count), 8);
    os.write(reinterpret_cast<const char*>(&rows), 8);
    os.write(reinterpret_cast<const char*>(&cols), 8);
    for (const auto& m : blobs)
      os.write(reinterpret_cast<const char*>(m.data().data()),
               static_cast<std::streamsize>(m.data().size() * sizeof(float)));
    if (!os) {
      fs::remove(tmp, ec);
      return;
    }
  }
  fs::rename(tmp, final_path, ec);
  if (ec) fs::remove(tmp, ec);
}

}  // namespace ncv::spectro
