#pragma once

// Thin FFTW wrapper: cached plans, zero-phase frequency masks, periodograms.
// Planning is serialized behind a mutex; execution uses the new-array API
// and is safe to call from several threads at once.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "saiyan/types.hpp"

namespace saiyan::fft {

namespace detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using Buffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
Buffer<T> alloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return Buffer<T>(p);
}

enum class Kind { C2CForward, C2CBackward, R2C, C2R };

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(Kind kind, std::size_t n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const int len = static_cast<int>(n);
    fftw_plan plan = nullptr;
    // Plans are made on scratch arrays with fftw_malloc alignment, so any
    // later fftw_malloc'd array satisfies the new-array execute contract.
    switch (kind) {
      case Kind::C2CForward:
      case Kind::C2CBackward: {
        auto in = alloc<fftw_complex>(n);
        auto out = alloc<fftw_complex>(n);
        plan = fftw_plan_dft_1d(len, in.get(), out.get(),
                                kind == Kind::C2CForward ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE);
        break;
      }
      case Kind::R2C: {
        auto in = alloc<double>(n);
        auto out = alloc<fftw_complex>(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(len, in.get(), out.get(), FFTW_ESTIMATE);
        break;
      }
      case Kind::C2R: {
        auto in = alloc<fftw_complex>(n / 2 + 1);
        auto out = alloc<double>(n);
        plan = fftw_plan_dft_c2r_1d(len, in.get(), out.get(), FFTW_ESTIMATE);
        break;
      }
    }
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::map<std::pair<Kind, std::size_t>, fftw_plan> plans_;
};

}  // namespace detail

// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
inline std::size_t good_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u, 7u})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

// Frequency of bin k for an n-point transform at `rate` (signed, in Hz).
inline double bin_frequency(std::size_t k, std::size_t n, double rate) {
  const double f = static_cast<double>(k) * rate / static_cast<double>(n);
  return (k <= n / 2) ? f : f - rate;
}

// Unnormalized forward DFT.
inline std::vector<cplx> forward(std::span<const cplx> x, std::size_t n = 0) {
  if (n == 0) n = x.size();
  auto in = detail::alloc<fftw_complex>(n);
  auto out = detail::alloc<fftw_complex>(n);
  auto* pin = reinterpret_cast<cplx*>(in.get());
  std::fill(pin, pin + n, cplx{});
  std::copy_n(x.begin(), std::min(n, x.size()), pin);
  fftw_execute_dft(detail::PlanCache::instance().get(detail::Kind::C2CForward, n), in.get(),
                   out.get());
  auto* pout = reinterpret_cast<cplx*>(out.get());
  return std::vector<cplx>(pout, pout + n);
}

// Inverse DFT including the 1/n factor.
inline std::vector<cplx> inverse(std::span<const cplx> X) {
  const std::size_t n = X.size();
  auto in = detail::alloc<fftw_complex>(n);
  auto out = detail::alloc<fftw_complex>(n);
  std::copy(X.begin(), X.end(), reinterpret_cast<cplx*>(in.get()));
  fftw_execute_dft(detail::PlanCache::instance().get(detail::Kind::C2CBackward, n), in.get(),
                   out.get());
  auto* pout = reinterpret_cast<cplx*>(out.get());
  std::vector<cplx> y(pout, pout + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : y) v *= scale;
  return y;
}

// Half spectrum (n/2 + 1 bins) of a real sequence zero-padded to n.
inline std::vector<cplx> forward_real(std::span<const double> x, std::size_t n = 0) {
  if (n == 0) n = x.size();
  auto in = detail::alloc<double>(n);
  auto out = detail::alloc<fftw_complex>(n / 2 + 1);
  std::fill(in.get(), in.get() + n, 0.0);
  std::copy_n(x.begin(), std::min(n, x.size()), in.get());
  fftw_execute_dft_r2c(detail::PlanCache::instance().get(detail::Kind::R2C, n), in.get(),
                       out.get());
  auto* pout = reinterpret_cast<cplx*>(out.get());
  return std::vector<cplx>(pout, pout + n / 2 + 1);
}

// Real sequence of length n from its half spectrum, including 1/n.
inline std::vector<double> inverse_real(std::span<const cplx> half, std::size_t n) {
  auto in = detail::alloc<fftw_complex>(n / 2 + 1);
  auto out = detail::alloc<double>(n);
  std::copy_n(half.begin(), n / 2 + 1, reinterpret_cast<cplx*>(in.get()));
  fftw_execute_dft_c2r(detail::PlanCache::instance().get(detail::Kind::C2R, n), in.get(),
                       out.get());
  std::vector<double> y(out.get(), out.get() + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : y) v *= scale;
  return y;
}

// Applies a real, zero-phase gain mask(|f|) to a real sequence. The input is
// zero-padded by `pad` samples on transform so circular wrap stays in the pad.
template <typename Mask>
void filter_real(std::vector<double>& x, double rate, Mask&& mask, std::size_t pad = 256) {
  if (x.empty()) return;
  const std::size_t n = good_size(x.size() + pad);
  auto X = forward_real(x, n);
  for (std::size_t k = 0; k < X.size(); ++k)
    X[k] *= mask(static_cast<double>(k) * rate / static_cast<double>(n));
  auto y = inverse_real(X, n);
  std::copy_n(y.begin(), x.size(), x.begin());
}

// Applies a zero-phase gain mask(f) (signed f) to a complex sequence.
template <typename Mask>
void filter_complex(std::vector<cplx>& x, double rate, Mask&& mask, std::size_t pad = 256) {
  if (x.empty()) return;
  const std::size_t n = good_size(x.size() + pad);
  auto X = forward(x, n);
  for (std::size_t k = 0; k < n; ++k) X[k] *= mask(bin_frequency(k, n, rate));
  auto y = inverse(X);
  std::copy_n(y.begin(), x.size(), x.begin());
}

// Band-limited interpolation of a real sequence by an integer factor.
inline std::vector<double> upsample_real(std::span<const double> x, std::size_t factor) {
  if (factor <= 1 || x.empty()) return std::vector<double>(x.begin(), x.end());
  const std::size_t n = good_size(x.size() + 256);
  auto X = forward_real(x, n);
  const std::size_t m = n * factor;
  std::vector<cplx> Y(m / 2 + 1, cplx{});
  std::copy(X.begin(), X.end(), Y.begin());
  if (n % 2 == 0) Y[n / 2] *= 0.5;  // split the Nyquist bin
  auto y = inverse_real(Y, m);
  for (auto& v : y) v *= static_cast<double>(factor);
  y.resize(x.size() * factor);
  return y;
}

// Band-limited interpolation of a complex sequence by an integer factor.
inline std::vector<cplx> upsample_complex(std::span<const cplx> x, std::size_t factor) {
  if (factor <= 1 || x.empty()) return std::vector<cplx>(x.begin(), x.end());
  const std::size_t n = good_size(x.size() + 256);
  auto X = forward(x, n);
  const std::size_t m = n * factor;
  std::vector<cplx> Y(m, cplx{});
  const std::size_t half = n / 2;
  for (std::size_t k = 0; k < n; ++k) {
    if (k < half) {
      Y[k] = X[k];
    } else if (k > half) {
      Y[m - (n - k)] = X[k];
    } else {
      Y[k] = 0.5 * X[k];
      Y[m - (n - k)] = 0.5 * X[k];
    }
  }
  auto y = inverse(Y);
  for (auto& v : y) v *= static_cast<double>(factor);
  y.resize(x.size() * factor);
  return y;
}

// One-sided periodogram of a real sequence: power per bin such that the sum
// over all bins equals the mean square of x. Bin k is at k * rate / n.
inline std::vector<double> periodogram(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> p;
  if (n == 0) return p;
  auto X = forward_real(x, n);
  p.resize(X.size());
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (std::size_t k = 0; k < X.size(); ++k) {
    const bool doubled = k != 0 && !(n % 2 == 0 && k == n / 2);
    p[k] = std::norm(X[k]) * norm * (doubled ? 2.0 : 1.0);
  }
  return p;
}

// Two-sided periodogram of a complex sequence, bins in natural FFT order.
inline std::vector<double> periodogram(std::span<const cplx> x) {
  const std::size_t n = x.size();
  std::vector<double> p;
  if (n == 0) return p;
  auto X = forward(x, n);
  p.resize(n);
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) p[k] = std::norm(X[k]) * norm;
  return p;
}

}  // namespace saiyan::fft
