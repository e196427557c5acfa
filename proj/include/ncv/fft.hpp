#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace ncv {

/// Real-to-complex / complex-to-real transforms of a fixed length, backed by
/// FFTW. A plan is cheap to share: execute() is safe to call concurrently.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// Unnormalized forward transform; out.size() must equal bins().
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Unnormalized inverse (no 1/n factor); out.size() must equal size().
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace ncv
