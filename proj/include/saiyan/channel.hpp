#pragma once

// Log-distance link budget, thermal noise and in-band interference.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

#include "saiyan/fft.hpp"
#include "saiyan/random.hpp"
#include "saiyan/types.hpp"

namespace saiyan {

// RF noise at the antenna plus the baseband impairments of the square-law
// detector. Detector-side levels are in detector output volts (the detector
// responsivity k_att is in V/mW, so with k_att = 1 a volt equals one mW of
// detector input power).
struct NoiseModel {
  double awgn_density = 1.0;        // RF white noise, multiple of the noise floor
  double dc_offset = 0.0;           // constant detector output offset (V)
  double flicker_corner_hz = 125e3; // 1/f noise lives below this frequency
  double flicker_gain = 0.0;        // rms of the 1/f process (V)
  double detector_density = 0.0;    // white detector noise (V/sqrt(Hz))

  void validate() const {
    if (awgn_density < 0 || dc_offset < 0 || flicker_corner_hz < 0 || flicker_gain < 0 ||
        detector_density < 0)
      throw ConfigError("noise model terms must be nonnegative");
  }

  NoiseModel rf_only() const {
    NoiseModel m = *this;
    m.dc_offset = m.flicker_gain = m.detector_density = 0.0;
    return m;
  }
  bool has_detector_noise() const {
    return dc_offset > 0 || flicker_gain > 0 || detector_density > 0;
  }
};

enum class JammerKind { Tone, Wideband };

struct Jammer {
  double center_offset_hz = 0.0;
  double power_dbm = kNegInf;
  JammerKind kind = JammerKind::Tone;
  double bandwidth_hz = 500e3;  // occupied width of the wideband kind
};

// -174 dBm/Hz thermal floor over bw plus a receiver noise figure.
inline double default_noise_floor_dbm(double bw, double noise_figure_db = 6.0) {
  return -174.0 + 10.0 * std::log10(bw) + noise_figure_db;
}

struct LinkBudget {
  double tx_power_dbm = 20.0;
  double tx_gain_dbi = 3.0;
  double rx_gain_dbi = 3.0;
  double pl0_db = 0.0;
  double pl_exponent = 2.7;
  double noise_floor_dbm = default_noise_floor_dbm(500e3);  // -inf disables RF noise
  double noise_bw_hz = 500e3;  // bandwidth the noise floor is quoted in
  NoiseModel rf_noise;

  void validate() const {
    if (pl_exponent < 1.6 || pl_exponent > 6.0)
      throw ConfigError("path loss exponent must be in [1.6, 6.0]");
    if (!(noise_floor_dbm < tx_power_dbm))
      throw ConfigError("noise floor must be below the transmit power");
    if (!(noise_bw_hz > 0)) throw ConfigError("noise bandwidth must be positive");
    rf_noise.validate();
  }

  // Reference loss that places `rss_target_dbm` at `distance_m`.
  double solve_pl0(double distance_m, double rss_target_dbm) const {
    return tx_power_dbm + tx_gain_dbi + rx_gain_dbi - rss_target_dbm -
           10.0 * pl_exponent * std::log10(distance_m);
  }

  static constexpr double kSensitivityDistanceM = 180.0;
  static constexpr double kSensitivityDbm = -85.8;

  // Default budget for a bandwidth, with pl0 calibrated to the sensitivity
  // point (-85.8 dBm at 180 m).
  static LinkBudget defaults(double bw) {
    LinkBudget b;
    b.noise_floor_dbm = default_noise_floor_dbm(bw);
    b.noise_bw_hz = bw;
    b.rf_noise.flicker_corner_hz = bw / 4.0;
    b.pl0_db = b.solve_pl0(kSensitivityDistanceM, kSensitivityDbm);
    return b;
  }
};

inline double rss_dbm(const LinkBudget& link, double distance_m) {
  if (!(distance_m >= 1.0)) throw std::domain_error("distance must be at least 1 m");
  return link.tx_power_dbm + link.tx_gain_dbi + link.rx_gain_dbi - link.pl0_db -
         10.0 * link.pl_exponent * std::log10(distance_m);
}

namespace detail {

inline void add_complex_awgn(std::vector<cplx>& x, double variance, Rng& rng) {
  if (!(variance > 0.0)) return;
  std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
  for (auto& v : x) {
    const double re = g(rng);
    const double im = g(rng);
    v += cplx(re, im);
  }
}

}  // namespace detail

// Scales a unit-amplitude transmit waveform to the received power at
// `distance_m` and adds complex white noise whose power inside noise_bw_hz
// equals the configured floor. Amplitude 1 at the input means full transmit
// power; output samples are in sqrt(mW).
inline ComplexStream apply_channel(const ComplexStream& in, const LinkBudget& link,
                                   double distance_m, std::uint64_t rng_seed) {
  const double gain = std::sqrt(dbm_to_mw(rss_dbm(link, distance_m)));
  ComplexStream out = in;
  out.domain = Domain::Passband;
  for (auto& v : out.samples) v *= gain;
  if (std::isfinite(link.noise_floor_dbm) && link.rf_noise.awgn_density > 0.0) {
    const double variance = link.rf_noise.awgn_density * dbm_to_mw(link.noise_floor_dbm) *
                            in.rate / link.noise_bw_hz;
    Rng rng = make_rng(rng_seed, SeedStream::Channel);
    detail::add_complex_awgn(out.samples, variance, rng);
  }
  return out;
}

inline ComplexStream inject_interferer(const ComplexStream& in, const Jammer& jam,
                                       std::uint64_t rng_seed) {
  if (std::abs(jam.center_offset_hz) > in.rate / 2.0)
    throw ConfigError("jammer offset outside the representable band");
  ComplexStream out = in;
  if (std::isnan(jam.power_dbm) || jam.power_dbm == std::numeric_limits<double>::infinity())
    throw ConfigError("jammer power must be finite");
  if (jam.power_dbm == kNegInf) return out;
  const double power = dbm_to_mw(jam.power_dbm);
  if (jam.kind == JammerKind::Tone) {
    const double amp = std::sqrt(power);
    for (std::size_t i = 0; i < out.size(); ++i)
      out.samples[i] += std::polar(amp, kTwoPi * jam.center_offset_hz * out.time_at(i));
    return out;
  }
  if (!(jam.bandwidth_hz > 0)) throw ConfigError("wideband jammer needs a positive bandwidth");
  std::vector<cplx> noise(in.size(), cplx{});
  Rng rng = make_rng(rng_seed, SeedStream::Jammer);
  detail::add_complex_awgn(noise, 1.0, rng);
  const double lo = jam.center_offset_hz - jam.bandwidth_hz / 2.0;
  const double hi = jam.center_offset_hz + jam.bandwidth_hz / 2.0;
  fft::filter_complex(noise, in.rate, [&](double f) { return (f >= lo && f <= hi) ? 1.0 : 0.0; });
  double p = 0.0;
  for (const auto& v : noise) p += std::norm(v);
  p /= static_cast<double>(std::max<std::size_t>(noise.size(), 1));
  const double scale = p > 0 ? std::sqrt(power / p) : 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += scale * noise[i];
  return out;
}

}  // namespace saiyan
