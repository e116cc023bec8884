#pragma once

// Double-threshold quantization, preamble search, trailing-edge symbol
// decoding and template correlation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "saiyan/fft.hpp"
#include "saiyan/frontend.hpp"
#include "saiyan/types.hpp"
#include "saiyan/waveform.hpp"

namespace saiyan {

struct SamplingRates {
  double theory_hz;      // 2 bw / 2^(sf-K)
  double configured_hz;  // 3.2 bw / 2^(sf-K)
};

inline constexpr double kSamplingFactor = 3.2;

inline SamplingRates sampling_rate(const SymbolParams& p) {
  const double base = p.bw / std::ldexp(1.0, p.sf - p.k_bits);
  return {2.0 * base, kSamplingFactor * base};
}

// Post-detection low-pass cutoff as a fraction of the comparator rate.
inline constexpr double kEnvelopeLpfFraction = 0.5;

// Front end whose filters track the comparator rate of `p`.
inline FrontendConfig default_frontend(const SymbolParams& p) {
  FrontendConfig fe;
  const double lpf = kEnvelopeLpfFraction * sampling_rate(p).configured_hz;
  fe.env.lpf_cutoff_hz = lpf;
  fe.shift = ShiftConfig::defaults(p.bw, lpf);
  return fe;
}

struct ComparatorConfig {
  double u_high = 1.0;
  double u_low = 0.5;
};

struct ComparatorState {
  bool last_output = false;
};

// One comparator update: from low go high iff a >= U_H; from high go low
// iff a < U_L.
inline std::pair<bool, ComparatorState> comparator_step(ComparatorState state, double a,
                                                        const ComparatorConfig& cfg) {
  const bool out = state.last_output ? (a >= cfg.u_low) : (a >= cfg.u_high);
  return {out, ComparatorState{out}};
}

// Offline threshold calibration: peak detector amplitude, gap G to U_H and
// the U_L/U_H factor, with an optional distance-bucketed lookup table.
struct ThresholdCalibration {
  struct Entry {
    double a_max;
    double u_f;
    double g_db;
  };

  double a_max = 1.0;
  double g_db = 3.0;
  double u_f = 0.8;
  std::map<double, Entry> table;

  void validate() const {
    if (!(a_max > 0)) throw CalibrationError("peak amplitude must be positive");
    if (!(g_db >= 0)) throw CalibrationError("threshold gap must be nonnegative");
    if (!(u_f > 0 && u_f < 1)) throw CalibrationError("U_F must lie in (0, 1)");
  }

  // Calibration for the nearest stored distance bucket.
  ThresholdCalibration at(double distance_m) const {
    if (table.empty()) return *this;
    auto it = table.lower_bound(distance_m);
    if (it == table.end()) {
      --it;
    } else if (it != table.begin()) {
      auto prev = std::prev(it);
      if (distance_m - prev->first < it->first - distance_m) it = prev;
    }
    ThresholdCalibration c = *this;
    c.table.clear();
    c.a_max = it->second.a_max;
    c.u_f = it->second.u_f;
    c.g_db = it->second.g_db;
    return c;
  }
};

// U_H = A_max / 10^(G/20), U_L = U_H * U_F.
inline ComparatorConfig thresholds(const ThresholdCalibration& cal) {
  const double u_high = cal.a_max * std::pow(10.0, -cal.g_db / 20.0);
  const double u_low = u_high * cal.u_f;
  if (!(u_low > 0) || !(u_low < u_high))
    throw CalibrationError("calibration yields U_L outside (0, U_H)");
  return {u_high, u_low};
}

// Nearest-sample decimation to `rate`, then the comparator fold from low.
inline BitStream quantize(const RealStream& in, const ComparatorConfig& cfg, double rate) {
  if (!(rate > 0) || rate > in.rate) throw ConfigError("comparator rate must be in (0, stream rate]");
  BitStream out;
  out.rate = rate;
  out.t0 = in.t0;
  out.domain = Domain::Binary;
  if (in.empty()) return out;
  const double step = in.rate / rate;
  const auto count = static_cast<std::size_t>(std::floor((in.size() - 1) / step)) + 1;
  out.samples.resize(count);
  ComparatorState st;
  for (std::size_t j = 0; j < count; ++j) {
    const auto idx = std::min(in.size() - 1, static_cast<std::size_t>(std::llround(j * step)));
    auto [bit, next] = comparator_step(st, in.samples[idx], cfg);
    out.samples[j] = bit ? 1 : 0;
    st = next;
  }
  return out;
}

// Number of maximal runs of ones.
inline std::size_t count_high_runs(const BitStream& b) {
  std::size_t runs = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.samples[i] && (i == 0 || !b.samples[i - 1])) ++runs;
  return runs;
}

struct FallingEdge {
  double position;  // last high sample index + 0.5
  std::size_t run;  // length of the high run it terminates
};

inline std::vector<FallingEdge> falling_edges(const BitStream& b) {
  std::vector<FallingEdge> edges;
  std::size_t run = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b.samples[i]) {
      ++run;
      continue;
    }
    if (run > 0) edges.push_back({static_cast<double>(i) - 0.5, run});
    run = 0;
  }
  return edges;
}

// Payload start, in samples of `bits`, or nullopt when no preamble is found.
// Accepts >= min_hits of preamble_len falling edges on a symbol-period grid;
// among candidates, edges inside the following sync gap count against a
// candidate and ties go to the later one. Candidates whose payload would
// start after `latest_start` are ignored.
inline std::optional<double> detect_preamble(
    const BitStream& bits, const SymbolParams& p, int preamble_len = 10, double sync_len = 2.25,
    int min_hits = 8, double latest_start = std::numeric_limits<double>::infinity()) {
  const auto edges = falling_edges(bits);
  if (edges.empty()) return std::nullopt;
  const double ns = p.symbol_time() * bits.rate;
  const double tol = 0.45 * ns / static_cast<double>(p.bins());

  std::vector<double> pos(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) pos[i] = edges[i].position;
  auto nearest = [&](double x) -> std::optional<double> {
    auto it = std::lower_bound(pos.begin(), pos.end(), x - tol);
    if (it != pos.end() && *it <= x + tol) {
      // pick the closest within tolerance
      double best = *it;
      for (auto jt = it; jt != pos.end() && *jt <= x + tol; ++jt)
        if (std::abs(*jt - x) < std::abs(best - x)) best = *jt;
      return best;
    }
    return std::nullopt;
  };
  auto count_in = [&](double lo, double hi) {
    return static_cast<int>(std::upper_bound(pos.begin(), pos.end(), hi) -
                            std::upper_bound(pos.begin(), pos.end(), lo));
  };

  bool found = false;
  int best_score = 0;
  double best_end = 0.0;
  for (double e : pos) {
    for (int shift = 0; shift < 2; ++shift) {
      const double cand = e + shift * ns;
      int hits = 0;
      double acc = 0.0;
      for (int m = 0; m < preamble_len; ++m) {
        if (auto hit = nearest(cand - m * ns)) {
          ++hits;
          acc += *hit + m * ns;
        }
      }
      if (hits < min_hits) continue;
      const double end = acc / hits;
      if (end + sync_len * ns > latest_start) continue;
      const int score = hits - count_in(end + tol, end + sync_len * ns + tol);
      if (!found || score > best_score || (score == best_score && end > best_end + tol)) {
        found = true;
        best_score = score;
        best_end = end;
      }
    }
  }
  if (!found) return std::nullopt;
  return best_end + sync_len * ns;
}

// Symbol value from the trailing edge of the high run inside the window that
// starts at `window_start` (fractional sample of `bits`). An edge one symbol
// period after the start means value 0, as does a run that continues past
// the window. nullopt marks an erasure.
inline std::optional<std::uint32_t> decode_symbol(const BitStream& bits, double window_start,
                                                  const SymbolParams& p) {
  const double ns = p.symbol_time() * bits.rate;
  const double bins = static_cast<double>(p.bins());
  const double h = 0.5 * ns / bins;
  const double lo = window_start + h;
  const double hi = window_start + ns + h;
  const double boundary = window_start + ns - h;
  if (bits.empty()) return std::nullopt;

  const auto last = static_cast<std::ptrdiff_t>(bits.size()) - 1;
  const auto first_i = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(lo - 0.5)));
  const auto last_i = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(std::floor(hi - 0.5)));
  if (first_i > last_i) return std::nullopt;

  bool any_high = false;
  bool boundary_edge = false;
  std::optional<double> best_edge;
  std::size_t best_run = 0;
  for (auto i = first_i; i <= last_i; ++i) {
    if (!bits.samples[i]) continue;
    any_high = true;
    const bool falls = i < last && !bits.samples[i + 1];
    if (!falls) continue;
    const double e = static_cast<double>(i) + 0.5;
    if (e >= boundary) {
      boundary_edge = true;
      continue;
    }
    std::size_t run = 0;
    for (auto j = i; j >= 0 && bits.samples[j]; --j) ++run;
    if (run >= best_run) {
      best_run = run;
      best_edge = e;
    }
  }
  if (best_edge) {
    const double tf = *best_edge - window_start;
    const auto v = static_cast<long long>(std::llround(bins * (1.0 - tf / ns)));
    const auto m = static_cast<long long>(p.bins());
    return static_cast<std::uint32_t>(((v % m) + m) % m);
  }
  if (boundary_edge) return 0u;
  if (any_high && bits.samples[last_i]) return 0u;
  return std::nullopt;
}

// High runs that overlap the decoding window of decode_symbol.
inline std::size_t runs_in_window(const BitStream& bits, double window_start, const SymbolParams& p) {
  const double ns = p.symbol_time() * bits.rate;
  const double h = 0.5 * ns / static_cast<double>(p.bins());
  const auto last = static_cast<std::ptrdiff_t>(bits.size()) - 1;
  const auto a = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(window_start + h - 0.5)));
  const auto b = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(std::floor(window_start + ns + h - 0.5)));
  std::size_t runs = 0;
  for (auto i = a; i <= b; ++i)
    if (bits.samples[i] && (i == a || !bits.samples[i - 1])) ++runs;
  return runs;
}

struct CorrelationPeak {
  std::size_t lag;
  double score;
};

enum class Normalization { Cosine, Pearson };

// Normalized cross-correlation of `tmpl` against every full-overlap lag of
// `stream`. Cosine scores are <x, t>/(|x||t|); Pearson removes both means
// first. Scores are clamped to [0, 1].
inline CorrelationPeak correlate(std::span<const double> stream, std::span<const double> tmpl,
                                 Normalization norm = Normalization::Cosine) {
  if (stream.empty() || tmpl.empty()) throw std::domain_error("correlate needs nonempty inputs");
  if (tmpl.size() > stream.size()) throw std::domain_error("template longer than stream");
  const std::size_t n = stream.size();
  const std::size_t m = tmpl.size();
  const std::size_t lags = n - m + 1;

  std::vector<double> t(tmpl.begin(), tmpl.end());
  if (norm == Normalization::Pearson) {
    double mean = 0;
    for (double v : t) mean += v;
    mean /= static_cast<double>(m);
    for (auto& v : t) v -= mean;
  }
  double tnorm2 = 0;
  for (double v : t) tnorm2 += v * v;

  // <x[l..l+m), t> for every lag via one FFT product.
  const std::size_t nfft = fft::good_size(n + m);
  std::vector<double> trev(m);
  std::reverse_copy(t.begin(), t.end(), trev.begin());
  auto X = fft::forward_real(stream, nfft);
  auto T = fft::forward_real(trev, nfft);
  for (std::size_t k = 0; k < X.size(); ++k) X[k] *= T[k];
  const auto conv = fft::inverse_real(X, nfft);

  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s1[i + 1] = s1[i] + stream[i];
    s2[i + 1] = s2[i] + stream[i] * stream[i];
  }
  auto window_norm2 = [&](std::size_t l) {
    double e = s2[l + m] - s2[l];
    if (norm == Normalization::Pearson) {
      const double sum = s1[l + m] - s1[l];
      e -= sum * sum / static_cast<double>(m);
    }
    return std::max(e, 0.0);
  };
  auto exact_score = [&](std::size_t l) {
    double mean = 0;
    if (norm == Normalization::Pearson) mean = (s1[l + m] - s1[l]) / static_cast<double>(m);
    double dot = 0, e = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double x = stream[l + i] - mean;
      dot += x * t[i];
      e += x * x;
    }
    if (e <= 0 || tnorm2 <= 0) return 0.0;
    return std::clamp(dot / std::sqrt(e * tnorm2), 0.0, 1.0);
  };

  CorrelationPeak best{0, -1.0};
  for (std::size_t l = 0; l < lags; ++l) {
    const double e = window_norm2(l);
    double score = 0.0;
    if (e > 1e-300 && tnorm2 > 0) score = conv[l + m - 1] / std::sqrt(e * tnorm2);
    if (score > best.score + 1e-12) best = {l, score};
  }
  best.score = exact_score(best.lag);
  return best;
}

inline CorrelationPeak correlate(const RealStream& stream, const RealStream& tmpl,
                                 Normalization norm = Normalization::Cosine) {
  return correlate(std::span<const double>(stream.samples), std::span<const double>(tmpl.samples),
                   norm);
}

// Score at a single lag (full overlap, no search).
inline double correlation_score(std::span<const double> window, std::span<const double> tmpl,
                                Normalization norm = Normalization::Pearson) {
  const std::size_t m = std::min(window.size(), tmpl.size());
  if (m == 0) return 0.0;
  double mw = 0, mt = 0;
  if (norm == Normalization::Pearson) {
    for (std::size_t i = 0; i < m; ++i) {
      mw += window[i];
      mt += tmpl[i];
    }
    mw /= static_cast<double>(m);
    mt /= static_cast<double>(m);
  }
  double dot = 0, ew = 0, et = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = window[i] - mw;
    const double b = tmpl[i] - mt;
    dot += a * b;
    ew += a * a;
    et += b * b;
  }
  if (ew <= 0 || et <= 0) return 0.0;
  return std::clamp(dot / std::sqrt(ew * et), 0.0, 1.0);
}

enum class DemodMode { Vanilla, Shifted, Correlated };

inline std::string_view to_string(DemodMode m) {
  switch (m) {
    case DemodMode::Vanilla: return "vanilla";
    case DemodMode::Shifted: return "shifted";
    case DemodMode::Correlated: return "correlated";
  }
  return "?";
}

inline DemodMode parse_mode(std::string_view s) {
  if (s == "vanilla") return DemodMode::Vanilla;
  if (s == "shifted") return DemodMode::Shifted;
  if (s == "correlated") return DemodMode::Correlated;
  throw ConfigError("unknown demodulation mode: " + std::string(s));
}

// When the correlated mode re-decodes a symbol from its envelope: only on
// comparator erasures, on erasures and windows without exactly one high run,
// or always.
enum class CorrelationPolicy { Erasure, Ambiguous, Always };

inline std::string_view to_string(CorrelationPolicy p) {
  switch (p) {
    case CorrelationPolicy::Erasure: return "erasure";
    case CorrelationPolicy::Ambiguous: return "ambiguous";
    case CorrelationPolicy::Always: return "always";
  }
  return "?";
}

inline CorrelationPolicy parse_policy(std::string_view s) {
  if (s == "erasure") return CorrelationPolicy::Erasure;
  if (s == "ambiguous") return CorrelationPolicy::Ambiguous;
  if (s == "always") return CorrelationPolicy::Always;
  throw ConfigError("unknown correlation policy: " + std::string(s));
}

struct DemodResult {
  std::vector<std::optional<std::uint32_t>> symbols;  // nullopt = erasure
  double payload_start_s = 0.0;                       // stream time of payload start
  bool synced_by_correlation = false;
  std::size_t recovered_by_correlation = 0;
};

// Full receive pipeline for one parameter set. Templates for the correlated
// mode are built on first use.
class Demodulator {
 public:
  // Minimum Pearson score accepted for a correlation preamble match.
  static constexpr double kSyncScoreThreshold = 0.5;

  Demodulator(SymbolParams params, FrontendConfig frontend)
      : params_(params), fe_(std::move(frontend)) {
    params_.validate();
  }

  const SymbolParams& params() const { return params_; }
  const FrontendConfig& frontend() const { return fe_; }
  double comparator_rate() const { return sampling_rate(params_).configured_hz; }

  RealStream envelope(const ComplexStream& antenna, DemodMode mode,
                      const DetectorNoise* noise = nullptr) const {
    return frontend_envelope(antenna, fe_, params_.f_carrier, mode != DemodMode::Vanilla, noise);
  }

  // Thresholds from a noiseless probe. G is raised above `g_db` when needed
  // so that the above-U_H stretch before each peak spans at least two
  // comparator samples.
  ThresholdCalibration calibrate(const ComplexStream& noiseless_probe, DemodMode mode,
                                 double g_db = 3.0, double u_f = 0.8) const {
    const auto env = envelope(noiseless_probe, mode);
    ThresholdCalibration cal;
    cal.a_max = env.samples.empty() ? 0.0 : *std::max_element(env.samples.begin(), env.samples.end());
    cal.u_f = u_f;
    cal.g_db = std::max(g_db, min_gap_db(mode, noiseless_probe.rate));
    cal.validate();
    return cal;
  }

  std::optional<DemodResult> demodulate(const ComplexStream& antenna, DemodMode mode,
                                        const ThresholdCalibration& cal, std::size_t n_symbols,
                                        const DetectorNoise* noise = nullptr) const {
    const RealStream env = envelope(antenna, mode, noise);
    return demodulate_envelope(env, mode, cal, n_symbols);
  }

  std::optional<DemodResult> demodulate_envelope(const RealStream& env, DemodMode mode,
                                                 const ThresholdCalibration& cal,
                                                 std::size_t n_symbols) const {
    const double rc = comparator_rate();
    const BitStream bits = quantize(env, thresholds(cal), rc);
    const double ns = params_.symbol_time() * rc;
    const double env_per_bit = env.rate / rc;

    // the whole payload has to fit in the capture
    const double h = 0.5 * ns / static_cast<double>(params_.bins());
    const double latest = static_cast<double>(bits.size()) - static_cast<double>(n_symbols) * ns + h;

    DemodResult res;
    std::optional<double> start;  // in comparator samples
    if (mode == DemodMode::Correlated) {
      if (auto s = correlation_sync(env); s && *s / env_per_bit <= latest) {
        start = *s / env_per_bit;
        res.synced_by_correlation = true;
      }
    }
    if (!start) start = detect_preamble(bits, params_, 10, 2.25, 8, latest);
    if (!start) return std::nullopt;
    res.payload_start_s = bits.t0 + *start / rc;

    res.symbols.resize(n_symbols);
    for (std::size_t j = 0; j < n_symbols; ++j) {
      const double w = *start + static_cast<double>(j) * ns;
      res.symbols[j] = decode_symbol(bits, w, params_);
      if (mode == DemodMode::Correlated && needs_correlation(bits, w, res.symbols[j])) {
        res.symbols[j] = correlate_symbol(env, w * env_per_bit);
        if (res.symbols[j]) ++res.recovered_by_correlation;
      }
    }
    return res;
  }

  CorrelationPolicy correlation_policy() const { return policy_; }
  void set_correlation_policy(CorrelationPolicy p) { policy_ = p; }

  // Envelope templates (noiseless, unit transmit amplitude, shifted chain)
  // for every symbol value; one symbol period long.
  const std::vector<std::vector<double>>& symbol_templates(double rate) const {
    std::call_once(templates_once_, [&] { build_templates(rate); });
    if (rate != template_rate_) throw ConfigError("templates were built for another sample rate");
    return symbol_templates_;
  }

 private:
  bool needs_correlation(const BitStream& bits, double w,
                         const std::optional<std::uint32_t>& decided) const {
    switch (policy_) {
      case CorrelationPolicy::Erasure: return !decided;
      case CorrelationPolicy::Ambiguous: return !decided || runs_in_window(bits, w, params_) != 1;
      case CorrelationPolicy::Always: return true;
    }
    return !decided;
  }

  // Amplitude independent, so computed once per mode and rate.
  double min_gap_db(DemodMode mode, double rate) const {
    std::lock_guard lock(gap_mutex_);
    const auto key = std::make_pair(static_cast<int>(mode), rate);
    if (auto it = gap_cache_.find(key); it != gap_cache_.end()) return it->second;
    return gap_cache_[key] = compute_gap_db(mode, rate);
  }

  double compute_gap_db(DemodMode mode, double rate) const {
    // value-0 chirp repeated three times; look at the middle one
    Frame f{params_, {0, 0, 0}, 0, 0.0};
    const auto env = envelope(build_frame(f, rate), mode);
    const double T = params_.symbol_time();
    const auto i0 = static_cast<std::size_t>(std::llround(T * rate));
    const auto i1 = static_cast<std::size_t>(std::llround(2 * T * rate));
    double peak = 0;
    for (auto i = i0; i < i1; ++i) peak = std::max(peak, env.samples[i]);
    const auto back = static_cast<std::size_t>(std::llround(2.0 * rate / comparator_rate()));
    const double level = env.samples[i1 - 1 - std::min(back, i1 - i0 - 1)];
    if (peak <= 0 || level <= 0) return 0.0;
    return 20.0 * std::log10(peak / level);
  }

  void build_templates(double rate) const {
    const double T = params_.symbol_time();
    const auto i0 = static_cast<std::size_t>(std::llround(T * rate));
    const auto len = static_cast<std::size_t>(std::llround(T * rate));
    symbol_templates_.clear();
    for (std::uint32_t v = 0; v < params_.bins(); ++v) {
      Frame f{params_, {v, v, v}, 0, 0.0};
      const auto env = envelope(build_frame(f, rate), DemodMode::Shifted);
      symbol_templates_.emplace_back(env.samples.begin() + i0, env.samples.begin() + i0 + len);
    }
    // preamble + sync, padded by one symbol of silence on each side
    Frame pre{params_, {}, 10, 2.25};
    auto body = build_frame(pre, rate);
    ComplexStream padded;
    padded.rate = rate;
    padded.samples.assign(len, cplx{});
    padded.samples.insert(padded.samples.end(), body.samples.begin(), body.samples.end());
    padded.samples.insert(padded.samples.end(), len, cplx{});
    const auto env = envelope(padded, DemodMode::Shifted);
    preamble_template_.assign(env.samples.begin() + len, env.samples.begin() + len + body.size());
    template_rate_ = rate;
  }

  // Payload start (envelope samples) from the preamble template.
  std::optional<double> correlation_sync(const RealStream& env) const {
    symbol_templates(env.rate);
    if (preamble_template_.size() > env.size()) return std::nullopt;
    const auto peak = correlate(std::span<const double>(env.samples),
                                std::span<const double>(preamble_template_), Normalization::Pearson);
    if (peak.score < kSyncScoreThreshold) return std::nullopt;
    return static_cast<double>(peak.lag) + static_cast<double>(preamble_template_.size());
  }

  std::optional<std::uint32_t> correlate_symbol(const RealStream& env, double start) const {
    const auto& tmpls = symbol_templates(env.rate);
    const auto s = static_cast<std::ptrdiff_t>(std::llround(start));
    const auto len = static_cast<std::ptrdiff_t>(tmpls.front().size());
    if (s < 0 || s + len > static_cast<std::ptrdiff_t>(env.size())) return std::nullopt;
    std::span<const double> window(env.samples.data() + s, static_cast<std::size_t>(len));
    std::uint32_t best = 0;
    double best_score = -1;
    for (std::uint32_t v = 0; v < tmpls.size(); ++v) {
      const double sc = correlation_score(window, tmpls[v]);
      if (sc > best_score) {
        best_score = sc;
        best = v;
      }
    }
    return best;
  }

  SymbolParams params_;
  FrontendConfig fe_;
  CorrelationPolicy policy_ = CorrelationPolicy::Always;
  mutable std::once_flag templates_once_;
  mutable std::vector<std::vector<double>> symbol_templates_;
  mutable std::vector<double> preamble_template_;
  mutable double template_rate_ = 0.0;
  mutable std::mutex gap_mutex_;
  mutable std::map<std::pair<int, double>, double> gap_cache_;
};

// One-shot convenience wrapper around Demodulator.
inline std::optional<std::vector<std::optional<std::uint32_t>>> demodulate_frame(
    const ComplexStream& stream, const SymbolParams& params, DemodMode mode,
    const ThresholdCalibration& cal, std::size_t n_symbols, const FrontendConfig& fe,
    const DetectorNoise* noise = nullptr) {
  Demodulator d(params, fe);
  auto r = d.demodulate(stream, mode, cal, n_symbols, noise);
  if (!r) return std::nullopt;
  return r->symbols;
}

}  // namespace saiyan
