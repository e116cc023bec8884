#pragma once

// LoRa chirp synthesis in complex baseband. Frequencies are offsets from
// SymbolParams::f_carrier and live in [0, bw).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "saiyan/types.hpp"

namespace saiyan {

struct SymbolParams {
  int sf = 7;
  double bw = 500e3;
  int k_bits = 2;
  double f_carrier = 433.5e6;

  void validate() const {
    if (sf < 7 || sf > 12) throw ConfigError("spreading factor must be in [7, 12]");
    if (bw != 125e3 && bw != 250e3 && bw != 500e3)
      throw ConfigError("bandwidth must be 125, 250 or 500 kHz");
    if (k_bits < 1 || k_bits > 5) throw ConfigError("bits per chirp must be in [1, 5]");
    if (k_bits > sf) throw ConfigError("bits per chirp cannot exceed the spreading factor");
    if (!(f_carrier > 0.0)) throw ConfigError("carrier frequency must be positive");
  }

  static SymbolParams make(int sf, double bw, int k_bits, double f_carrier = 433.5e6) {
    SymbolParams p{sf, bw, k_bits, f_carrier};
    p.validate();
    return p;
  }

  double symbol_time() const { return std::ldexp(1.0, sf) / bw; }
  double slope() const { return bw * bw / std::ldexp(1.0, sf); }
  std::uint32_t bins() const { return 1u << k_bits; }
  double data_rate_bps() const { return k_bits * bw / std::ldexp(1.0, sf); }

  // Initial frequency offset of a symbol value.
  double initial_offset(std::uint32_t value) const {
    return static_cast<double>(value) * bw / static_cast<double>(bins());
  }
};

struct SymbolTiming {
  double period_s;
  double slope_hz_per_s;
  std::uint32_t bins;
};

inline SymbolTiming symbol_timing(const SymbolParams& p) {
  return {p.symbol_time(), p.slope(), p.bins()};
}

namespace detail {

inline void check_value(const SymbolParams& p, std::uint32_t value) {
  if (value >= p.bins())
    throw std::domain_error("symbol value " + std::to_string(value) + " outside [0, " +
                            std::to_string(p.bins()) + ")");
}

// Phase (radians) accumulated `tau` seconds into a chirp starting at `f0`.
// The wrap at bw is phase-continuous.
inline double chirp_phase(const SymbolParams& p, double f0, double tau) {
  const double k = p.slope();
  const double t_wrap = (p.bw - f0) / k;
  double cycles = f0 * tau + 0.5 * k * tau * tau;
  if (tau > t_wrap) cycles -= p.bw * (tau - t_wrap);
  return kTwoPi * cycles;
}

// Instantaneous frequency of a chirp at local time tau.
inline double chirp_frequency(const SymbolParams& p, double f0, double tau) {
  double f = f0 + p.slope() * tau;
  if (f >= p.bw) f -= p.bw;
  return f;
}

inline std::size_t samples_for(double duration, double rate) {
  return static_cast<std::size_t>(std::llround(duration * rate));
}

}  // namespace detail

// Time at which the frequency of `value` reaches bw and wraps; the transformed
// amplitude peaks here.
inline double peak_time(const SymbolParams& p, std::uint32_t value) {
  detail::check_value(p, value);
  return p.symbol_time() * (1.0 - static_cast<double>(value) / static_cast<double>(p.bins()));
}

inline ComplexStream gen_chirp(const SymbolParams& p, std::uint32_t value, double rate,
                               double amplitude = 1.0) {
  detail::check_value(p, value);
  if (!(rate >= 2.0 * p.bw))
    throw ConfigError("sample rate below 2*bw for the complex baseband chirp");
  ComplexStream s;
  s.rate = rate;
  s.domain = Domain::Passband;
  const std::size_t n = detail::samples_for(p.symbol_time(), rate);
  s.samples.resize(n);
  const double f0 = p.initial_offset(value);
  for (std::size_t i = 0; i < n; ++i)
    s.samples[i] = std::polar(amplitude, detail::chirp_phase(p, f0, static_cast<double>(i) / rate));
  return s;
}

// First difference scaled by rate: the discrete d/dt. The output has one
// sample fewer and is centred half a sample later.
template <typename T>
Stream<T> differentiate(const Stream<T>& in) {
  if (in.size() < 2) throw std::domain_error("differentiate needs at least two samples");
  Stream<T> out;
  out.rate = in.rate;
  out.t0 = in.t0 + 0.5 / in.rate;
  out.domain = in.domain;
  out.samples.resize(in.size() - 1);
  for (std::size_t i = 1; i < in.size(); ++i)
    out.samples[i - 1] = (in.samples[i] - in.samples[i - 1]) * in.rate;
  return out;
}

struct Frame {
  SymbolParams params;
  std::vector<std::uint32_t> payload;
  int preamble_len = 10;
  double sync_len = 2.25;

  double airtime() const {
    return (preamble_len + sync_len + static_cast<double>(payload.size())) * params.symbol_time();
  }
  // Start of the first payload symbol, relative to frame start.
  double payload_start() const { return (preamble_len + sync_len) * params.symbol_time(); }
};

// Preamble of value-0 up-chirps, an idle carrier for the sync span, then the
// payload. Phase is continuous across every boundary.
inline ComplexStream build_frame(const Frame& frame, double rate, double amplitude = 1.0) {
  const SymbolParams& p = frame.params;
  p.validate();
  if (frame.preamble_len < 0 || frame.sync_len < 0.0) throw ConfigError("negative frame section");
  for (auto v : frame.payload) detail::check_value(p, v);
  if (!(rate >= 2.0 * p.bw))
    throw ConfigError("sample rate below 2*bw for the complex baseband chirp");

  const double T = p.symbol_time();
  struct Segment {
    double start;
    double duration;
    double f0;
    bool chirp;
  };
  std::vector<Segment> segs;
  double t = 0.0;
  for (int i = 0; i < frame.preamble_len; ++i, t += T) segs.push_back({t, T, 0.0, true});
  if (frame.sync_len > 0.0) {
    segs.push_back({t, frame.sync_len * T, 0.0, false});
    t += frame.sync_len * T;
  }
  for (auto v : frame.payload) {
    segs.push_back({t, T, p.initial_offset(v), true});
    t += T;
  }

  ComplexStream s;
  s.rate = rate;
  s.domain = Domain::Passband;
  const std::size_t n = detail::samples_for(frame.airtime(), rate);
  s.samples.resize(n);

  double phase0 = 0.0;
  std::size_t i = 0;
  for (std::size_t si = 0; si < segs.size(); ++si) {
    const auto& seg = segs[si];
    const double end = seg.start + seg.duration;
    const bool last = si + 1 == segs.size();
    for (; i < n; ++i) {
      const double ti = static_cast<double>(i) / rate;
      if (!last && ti >= end) break;
      const double tau = ti - seg.start;
      const double ph = seg.chirp ? detail::chirp_phase(p, seg.f0, tau) : 0.0;
      s.samples[i] = std::polar(amplitude, phase0 + ph);
    }
    const double end_phase = seg.chirp ? detail::chirp_phase(p, seg.f0, seg.duration) : 0.0;
    phase0 = std::fmod(phase0 + end_phase, kTwoPi);
  }
  return s;
}

}  // namespace saiyan
