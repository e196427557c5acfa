#include "ncv/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace ncv {
namespace {

// The FFTW planner is not thread-safe; execution with private buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
struct FftwDeleter {
  void operator()(T* p) const { fftw_free(p); }
};

}  // namespace

struct RealFft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

RealFft::RealFft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n == 0) throw std::invalid_argument("RealFft: length must be positive");
  const int len = static_cast<int>(n);
  double* real = fftw_alloc_real(n);
  fftw_complex* cplx = fftw_alloc_complex(bins());
  {
    std::lock_guard lock(planner_mutex());
    plans_->forward = fftw_plan_dft_r2c_1d(len, real, cplx, FFTW_ESTIMATE);
    plans_->inverse = fftw_plan_dft_c2r_1d(len, cplx, real, FFTW_ESTIMATE);
  }
  fftw_free(real);
  fftw_free(cplx);
  if (!plans_->forward || !plans_->inverse) throw std::runtime_error("RealFft: FFTW planning failed");
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() != n_ || out.size() != bins()) throw std::invalid_argument("RealFft::forward: size mismatch");
  std::unique_ptr<double, FftwDeleter<double>> real(fftw_alloc_real(n_));
  std::unique_ptr<fftw_complex, FftwDeleter<fftw_complex>> cplx(fftw_alloc_complex(bins()));
  std::copy(in.begin(), in.end(), real.get());
  fftw_execute_dft_r2c(plans_->forward, real.get(), cplx.get());
  for (std::size_t k = 0; k < bins(); ++k) out[k] = {cplx.get()[k][0], cplx.get()[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  if (in.size() != bins() || out.size() != n_) throw std::invalid_argument("RealFft::inverse: size mismatch");
  std::unique_ptr<double, FftwDeleter<double>> real(fftw_alloc_real(n_));
  std::unique_ptr<fftw_complex, FftwDeleter<fftw_complex>> cplx(fftw_alloc_complex(bins()));
  // c2r destroys its input, so it always works on the private copy.
  for (std::size_t k = 0; k < bins(); ++k) {
    cplx.get()[k][0] = in[k].real();
    cplx.get()[k][1] = in[k].imag();
  }
  fftw_execute_dft_c2r(plans_->inverse, cplx.get(), real.get());
  std::copy(real.get(), real.get() + n_, out.begin());
}

}  // namespace ncv
