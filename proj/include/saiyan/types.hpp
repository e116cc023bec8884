#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace saiyan {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Bad parameter combination supplied by the caller (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thresholds that cannot be realized by the comparator.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Downlink addressed to a tag that does not exist.
class AddressingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Domain { Passband, Baseband, Binary };

// Uniformly sampled waveform. Sample i sits at t0 + i / rate.
template <typename T>
struct Stream {
  double rate = 1.0;
  double t0 = 0.0;
  Domain domain = Domain::Baseband;
  std::vector<T> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration() const { return static_cast<double>(samples.size()) / rate; }
  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) / rate; }

  T& operator[](std::size_t i) { return samples[i]; }
  const T& operator[](std::size_t i) const { return samples[i]; }
};

using ComplexStream = Stream<cplx>;
using RealStream = Stream<double>;
using BitStream = Stream<std::uint8_t>;

inline double db_to_linear_power(double db) { return std::pow(10.0, db / 10.0); }
inline double db_to_linear_amplitude(double db) { return std::pow(10.0, db / 20.0); }
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

template <typename T>
double mean_power(const Stream<T>& s) {
  if (s.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& v : s.samples) acc += std::norm(v);
  return acc / static_cast<double>(s.size());
}

}  // namespace saiyan
