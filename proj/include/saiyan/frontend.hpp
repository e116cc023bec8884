#pragma once

// Receive chain: SAW frequency-to-amplitude conversion, LNA, square-law
// envelope detection and the cyclic-frequency shifting detector.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "saiyan/channel.hpp"
#include "saiyan/fft.hpp"
#include "saiyan/random.hpp"
#include "saiyan/types.hpp"

namespace saiyan {

// Tabulated SAW magnitude response. Gains are relative (maximum 0 dB); the
// insertion loss is subtracted on lookup.
struct SawResponse {
  double band_lo_hz = 433.5e6;
  double band_hi_hz = 434.0e6;
  std::vector<std::pair<double, double>> gain_table;  // (frequency Hz, gain dB)
  double insertion_loss_db = 10.0;

  // 11 anchors over 433.5-434 MHz. Spans to 434 MHz: 25 dB from 433.5,
  // 9.5 dB from 433.75 and 7.2 dB from 433.875 MHz.
  static SawResponse b3790() {
    SawResponse r;
    const double rel[11] = {-25.0, -21.9, -18.8, -15.7, -12.6, -9.5,
                            -8.9,  -8.2,  -6.2,  -3.1,  0.0};
    for (int i = 0; i < 11; ++i) r.gain_table.emplace_back(433.5e6 + 50e3 * i, rel[i]);
    return r;
  }

  // Rows of "frequency_hz,gain_db"; a non-numeric first line is a header.
  static SawResponse from_csv(std::istream& in, double insertion_loss_db = 10.0) {
    SawResponse r;
    r.insertion_loss_db = insertion_loss_db;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      double f = 0, g = 0;
      if (!(row >> f >> g)) {
        if (first) {
          first = false;
          continue;
        }
        throw ConfigError("malformed SAW table row: " + line);
      }
      first = false;
      r.gain_table.emplace_back(f, g);
    }
    if (r.gain_table.size() < 2) throw ConfigError("SAW table needs at least two rows");
    r.band_lo_hz = r.gain_table.front().first;
    r.band_hi_hz = r.gain_table.back().first;
    r.validate();
    return r;
  }

  void validate() const {
    if (gain_table.size() < 2) throw ConfigError("SAW table needs at least two rows");
    if (!(band_lo_hz < band_hi_hz)) throw ConfigError("SAW band edges out of order");
    for (std::size_t i = 1; i < gain_table.size(); ++i) {
      if (!(gain_table[i].first > gain_table[i - 1].first))
        throw ConfigError("SAW table frequencies must increase");
      const bool inside = gain_table[i - 1].first >= band_lo_hz && gain_table[i].first <= band_hi_hz;
      if (inside && !(gain_table[i].second > gain_table[i - 1].second))
        throw ConfigError("SAW gain must grow monotonically over the critical band");
    }
  }

  // Passband continues this far above band_hi before the stop band.
  double upper_edge_hz() const { return band_hi_hz + 0.5 * (band_hi_hz - band_lo_hz); }

  double floor_db() const {
    double g = gain_table.front().second;
    for (const auto& row : gain_table) g = std::min(g, row.second);
    return g;
  }

  // Relative gain (dB, before insertion loss), linear in dB between rows.
  // Below the table and beyond upper_edge_hz() it is the stop-band floor;
  // between the table top and upper_edge_hz() it holds the top value.
  double relative_db(double f) const {
    const auto& t = gain_table;
    if (f <= t.front().first) return floor_db();
    if (f > upper_edge_hz()) return floor_db();
    if (f >= t.back().first) return t.back().second;
    auto it = std::upper_bound(t.begin(), t.end(), f,
                               [](double v, const auto& row) { return v < row.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (f - lo.first) / (hi.first - lo.first);
    return lo.second + w * (hi.second - lo.second);
  }
};

inline double saw_gain_db(const SawResponse& resp, double freq_hz) {
  return resp.relative_db(freq_hz) - resp.insertion_loss_db;
}

// Quasi-static SAW model: each sample is scaled by the filter gain at its
// instantaneous frequency. The frequency comes from the phase difference
// x[i] conj(x[i-1]) summed over the last rate/(band width) samples, about
// the response time of the critical band.
inline std::size_t saw_window(const SawResponse& resp, double rate) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(rate / (resp.band_hi_hz - resp.band_lo_hz))));
}

inline ComplexStream apply_saw(const ComplexStream& in, const SawResponse& resp, double f_carrier) {
  if (in.size() < 2) throw std::domain_error("apply_saw needs at least two samples");
  ComplexStream out = in;
  const double to_hz = in.rate / kTwoPi;
  const std::size_t w = saw_window(resp, in.rate);
  std::vector<cplx> dz(in.size());
  for (std::size_t i = 1; i < in.size(); ++i) dz[i] = in.samples[i] * std::conj(in.samples[i - 1]);
  dz[0] = dz[1];
  cplx acc{};
  for (std::size_t i = 0; i < in.size(); ++i) {
    acc += dz[i];
    if (i >= w) acc -= dz[i - w];
    const double f = std::arg(acc) * to_hz;
    out.samples[i] *= db_to_linear_amplitude(saw_gain_db(resp, f_carrier + f));
  }
  return out;
}

inline ComplexStream apply_gain_db(ComplexStream s, double gain_db) {
  const double g = db_to_linear_amplitude(gain_db);
  for (auto& v : s.samples) v *= g;
  return s;
}

struct EnvelopeDetectorConfig {
  double k_att = 1.0;          // V/mW
  double lpf_cutoff_hz = 0.0;  // -3 dB point of the post-detection low-pass

  void validate(double rate) const {
    if (!(k_att > 0)) throw ConfigError("detector attenuation factor must be positive");
    if (!(lpf_cutoff_hz > 0) || !(lpf_cutoff_hz < rate / 2.0))
      throw ConfigError("detector low-pass cutoff must lie in (0, rate/2)");
  }
};

struct ShiftConfig {
  double delta_f_hz = 2e6;
  double delta_phi_rad = 0.02;
  double if_gain_db = 20.0;
  double if_bw_hz = 1e6;
  double lpf_cutoff_hz = 0.0;

  static ShiftConfig defaults(double bw, double lpf_cutoff_hz) {
    return {4.0 * bw, 0.02, 20.0, 2.0 * bw, lpf_cutoff_hz};
  }

  void validate(double bw, double cos_tolerance = 1e-3) const {
    if (!(delta_f_hz > bw)) throw ConfigError("clock frequency must exceed the bandwidth");
    if (!(std::cos(delta_phi_rad) >= 1.0 - cos_tolerance))
      throw ConfigError("delay-line phase too large: cos(delta_phi) must be ~1");
    if (!(if_bw_hz > 0) || !(lpf_cutoff_hz > 0)) throw ConfigError("shift filter widths must be positive");
    if (delta_f_hz - if_bw_hz / 2.0 <= lpf_cutoff_hz)
      throw ConfigError("IF band overlaps the baseband low-pass");
  }
};

// Zero-phase Gaussian low-pass with |H(fc)|^2 = 1/2. Its impulse response is
// positive, so nonnegative input stays nonnegative.
inline double gaussian_lowpass(double f, double fc) {
  const double r = f / fc;
  return std::exp(-0.5 * std::log(2.0) * r * r);
}

// 4th-order Butterworth magnitude band-pass centred at +/- f0.
inline double butterworth_bandpass(double f, double f0, double width) {
  const double r = (std::abs(f) - f0) / (width / 2.0);
  const double r2 = r * r;
  return 1.0 / std::sqrt(1.0 + r2 * r2 * r2 * r2);
}

// Baseband noise added at the detector output: DC offset, a 1/f process
// below the corner (equal-power single-pole sections one decade apart) and
// white noise of the given density.
inline std::vector<double> detector_noise(std::size_t n, double rate, const NoiseModel& m,
                                          std::uint64_t seed) {
  std::vector<double> out(n, m.dc_offset);
  if (n == 0) return out;
  Rng rng = make_rng(seed, SeedStream::Detector);
  std::normal_distribution<double> g(0.0, 1.0);
  if (m.flicker_gain > 0 && m.flicker_corner_hz > 0) {
    constexpr int kSections = 4;
    const double sigma = m.flicker_gain / std::sqrt(static_cast<double>(kSections));
    for (int s = 0; s < kSections; ++s) {
      const double fp = m.flicker_corner_hz * std::pow(10.0, -s);
      const double a = std::exp(-kTwoPi * fp / rate);
      const double b = sigma * std::sqrt(1.0 - a * a);
      double y = sigma * g(rng);
      for (std::size_t i = 0; i < n; ++i) {
        y = a * y + b * g(rng);
        out[i] += y;
      }
    }
  }
  if (m.detector_density > 0) {
    const double sigma = m.detector_density * std::sqrt(rate / 2.0);
    for (auto& v : out) v += sigma * g(rng);
  }
  return out;
}

// Realization of detector noise for one frame.
struct DetectorNoise {
  NoiseModel model;
  std::uint64_t seed = 0;
};

// k |x|^2 / 2: the square-law output of the real passband signal whose
// complex envelope is x, after the 2*f_carrier term is discarded.
inline RealStream square_law(const ComplexStream& in, double k_att) {
  RealStream out;
  out.rate = in.rate;
  out.t0 = in.t0;
  out.domain = Domain::Baseband;
  out.samples.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out.samples[i] = 0.5 * k_att * std::norm(in.samples[i]);
  return out;
}

// k x^2 for a real-valued signal (all three self-mixing terms kept).
inline RealStream square_law(const RealStream& in, double k_att) {
  RealStream out = in;
  out.domain = Domain::Baseband;
  for (auto& v : out.samples) v = k_att * v * v;
  return out;
}

inline RealStream envelope_detect(const ComplexStream& in, const EnvelopeDetectorConfig& cfg,
                                  const DetectorNoise* noise = nullptr) {
  cfg.validate(in.rate);
  RealStream out = square_law(in, cfg.k_att);
  if (noise != nullptr && noise->model.has_detector_noise()) {
    auto d = detector_noise(out.size(), out.rate, noise->model, noise->seed);
    for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += d[i];
  }
  fft::filter_real(out.samples, out.rate,
                   [&](double f) { return gaussian_lowpass(f, cfg.lpf_cutoff_hz); });
  for (auto& v : out.samples) v = std::max(v, 0.0);
  return out;
}

namespace detail {

inline double fold_frequency(double f, double rate) {
  double r = std::fmod(f, rate);
  if (r < 0) r += rate;
  return std::min(r, rate - r);
}

// Smallest integer oversampling that keeps the IF band, the 2*delta_f
// product and their aliases apart.
inline std::size_t shift_oversampling(const ShiftConfig& cfg, double rate) {
  const double guard = cfg.if_bw_hz / 2.0 + cfg.lpf_cutoff_hz;
  for (std::size_t u = 1; u < 64; ++u) {
    const double r = rate * static_cast<double>(u);
    const bool if_fits = cfg.delta_f_hz + cfg.if_bw_hz / 2.0 < r / 2.0;
    const bool image_clear =
        std::abs(fold_frequency(2.0 * cfg.delta_f_hz, r) - cfg.delta_f_hz) >= guard;
    if (if_fits && image_clear) return u;
  }
  throw ConfigError("cannot represent the shift clock at this sample rate");
}

}  // namespace detail

// Three-step cyclic-frequency shifting detector:
//  1. mix with CLK_in(delta_f) (unipolar clock 1 + cos) and square-law detect,
//     putting a copy of the envelope at delta_f next to the baseband copy;
//  2. band-pass around delta_f and amplify by if_gain_db; detector noise,
//     which is injected at baseband, is rejected here;
//  3. mix with CLK_out = CLK_in delayed by delta_phi and low-pass.
// Noiseless output equals if_gain * cos(delta_phi) times the plain detector.
inline RealStream cyclic_shift(const ComplexStream& in, const ShiftConfig& cfg,
                               const EnvelopeDetectorConfig& env,
                               const DetectorNoise* noise = nullptr) {
  if (!(cfg.lpf_cutoff_hz > 0) || !(cfg.if_bw_hz > 0))
    throw ConfigError("shift filter widths must be positive");
  if (cfg.delta_f_hz - cfg.if_bw_hz / 2.0 <= cfg.lpf_cutoff_hz)
    throw ConfigError("IF band overlaps the baseband low-pass");
  if (!(env.k_att > 0)) throw ConfigError("detector attenuation factor must be positive");
  if (!(cfg.lpf_cutoff_hz < in.rate / 2.0)) throw ConfigError("low-pass cutoff above Nyquist");

  const std::size_t up = detail::shift_oversampling(cfg, in.rate);
  const double rate = in.rate * static_cast<double>(up);
  std::vector<cplx> x = fft::upsample_complex(in.samples, up);
  const std::size_t n = x.size();

  // Step 1
  std::vector<double> v(n);
  const double w = kTwoPi * cfg.delta_f_hz;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = in.t0 + static_cast<double>(i) / rate;
    const double clk = 1.0 + std::cos(w * t);
    v[i] = 0.5 * env.k_att * std::norm(x[i] * clk);
  }
  if (noise != nullptr && noise->model.has_detector_noise()) {
    auto d = detector_noise(n, rate, noise->model, noise->seed);
    for (std::size_t i = 0; i < n; ++i) v[i] += d[i];
  }

  // Step 2
  const double g = db_to_linear_amplitude(cfg.if_gain_db);
  fft::filter_real(v, rate, [&](double f) {
    return g * butterworth_bandpass(f, cfg.delta_f_hz, cfg.if_bw_hz);
  });

  // Step 3
  for (std::size_t i = 0; i < n; ++i) {
    const double t = in.t0 + static_cast<double>(i) / rate;
    v[i] *= std::cos(w * t + cfg.delta_phi_rad);
  }
  fft::filter_real(v, rate, [&](double f) { return gaussian_lowpass(f, cfg.lpf_cutoff_hz); });

  RealStream out;
  out.rate = in.rate;
  out.t0 = in.t0;
  out.domain = Domain::Baseband;
  out.samples.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out.samples[i] = v[i * up];
  return out;
}

struct Band {
  double lo_hz;
  double hi_hz;
};

inline constexpr double kSnrCeilingDb = 100.0;

// Ratio of mean periodogram power in two disjoint bands, in dB, clamped to
// +/- 100 dB.
inline double measure_snr(const RealStream& s, Band signal, Band noise) {
  const double nyq = s.rate / 2.0;
  auto check = [&](Band b) {
    if (!(b.lo_hz >= 0 && b.lo_hz < b.hi_hz && b.hi_hz <= nyq))
      throw std::domain_error("band outside [0, Nyquist] or empty");
  };
  check(signal);
  check(noise);
  if (signal.lo_hz < noise.hi_hz && noise.lo_hz < signal.hi_hz)
    throw std::domain_error("signal and noise bands overlap");
  const auto p = fft::periodogram(s.samples);
  const double df = s.rate / static_cast<double>(s.size());
  auto band_mean = [&](Band b) {
    double acc = 0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double f = static_cast<double>(k) * df;
      if (f >= b.lo_hz && f <= b.hi_hz) {
        acc += p[k];
        ++count;
      }
    }
    if (count == 0) throw std::domain_error("band contains no periodogram bins");
    return acc / static_cast<double>(count);
  };
  const double ps = band_mean(signal);
  const double pn = band_mean(noise);
  if (pn <= 0) return ps > 0 ? kSnrCeilingDb : 0.0;
  if (ps <= 0) return -kSnrCeilingDb;
  return std::clamp(10.0 * std::log10(ps / pn), -kSnrCeilingDb, kSnrCeilingDb);
}

struct FrontendConfig {
  SawResponse saw = SawResponse::b3790();
  double lna_gain_db = 20.0;
  EnvelopeDetectorConfig env;
  ShiftConfig shift;
};

// Antenna-referred complex stream to detector output. `shifted` selects the
// cyclic-frequency shifting detector over the plain envelope detector.
inline RealStream frontend_envelope(const ComplexStream& antenna, const FrontendConfig& fe,
                                    double f_carrier, bool shifted,
                                    const DetectorNoise* noise = nullptr) {
  ComplexStream x = apply_gain_db(apply_saw(antenna, fe.saw, f_carrier), fe.lna_gain_db);
  return shifted ? cyclic_shift(x, fe.shift, fe.env, noise) : envelope_detect(x, fe.env, noise);
}

}  // namespace saiyan
