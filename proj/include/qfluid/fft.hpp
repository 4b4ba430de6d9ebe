#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <unordered_map>
#include <vector>

#include <fftw3.h>

namespace qfluid::detail {

// Process-wide plan cache. Plans are created with FFTW_ESTIMATE|FFTW_UNALIGNED
// so the algorithm choice depends only on the transform size, never on buffer
// addresses or prior measurements; repeated runs therefore produce identical
// floating-point results. Plans are tiny and kept for the process lifetime.
class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans p;
    return p;
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = n * 2 + (sign == FFTW_FORWARD ? 0 : 1);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(n);
    fftw_plan p = fftw_plan_dft_1d(
        static_cast<int>(n),
        reinterpret_cast<fftw_complex*>(scratch.data()),
        reinterpret_cast<fftw_complex*>(scratch.data()),
        sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

 private:
  FftPlans() = default;
  std::mutex mu_;
  std::unordered_map<std::size_t, fftw_plan> plans_;
};

// In-place unnormalized complex transform; sign FFTW_FORWARD or FFTW_BACKWARD.
inline void fft_inplace(std::complex<double>* data, std::size_t n, int sign) {
  fftw_plan p = FftPlans::instance().get(n, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
}

}  // namespace qfluid::detail
