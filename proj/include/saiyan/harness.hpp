#pragma once

// Monte Carlo experiments: BER/throughput/PRR per distance, range search,
// ablation, sweeps, the RLC calculator, config I/O and CSV emission.

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "saiyan/channel.hpp"
#include "saiyan/demodulator.hpp"
#include "saiyan/frontend.hpp"
#include "saiyan/mac.hpp"
#include "saiyan/random.hpp"
#include "saiyan/waveform.hpp"

namespace saiyan {

// Detector-side noise of the calibrated default channel (detector output
// volts with k_att = 1 V/mW).
struct DefaultNoise {
  static constexpr double kDcOffset = 1e-8;
  static constexpr double kFlickerGain = 3e-8;
  static constexpr double kDetectorDensity = 2.5e-11;
};

inline NoiseModel calibrated_noise(double bw) {
  NoiseModel m;
  m.awgn_density = 1.0;
  m.dc_offset = DefaultNoise::kDcOffset;
  m.flicker_corner_hz = bw / 4.0;
  m.flicker_gain = DefaultNoise::kFlickerGain;
  m.detector_density = DefaultNoise::kDetectorDensity;
  return m;
}

struct ComparatorSettings {
  double g_db = 3.0;
  double u_f = 0.8;
  double lpf_fraction = kEnvelopeLpfFraction;  // detector LPF cutoff / comparator rate
  CorrelationPolicy correlation_policy = CorrelationPolicy::Always;
};

// Optional overrides of the bandwidth-derived shift defaults (0 = default).
struct ShiftSettings {
  double delta_f_hz = 0.0;
  double delta_phi_rad = 0.02;
  double if_gain_db = 20.0;
  double if_bw_hz = 0.0;
  double lpf_cutoff_hz = 0.0;
};

struct MacScenario {
  int n_tags = 10;
  int n_slots = 0;  // 0 = n_tags
  double p_uplink = 0.456;
  int max_retx = 1;
  std::size_t n_packets = 100000;
  std::size_t aloha_rounds = 100000;
  double p_jammed = 0.47;
  double p_clean = 0.92;
  std::uint32_t hop_channel = 2;
  std::string downlink = "abstract";  // or "pipeline"
  double p_downlink = 1.0;
  double downlink_distance_m = 50.0;
  std::size_t window = 100;
};

struct ExperimentConfig {
  SymbolParams symbol;
  LinkBudget link = LinkBudget::defaults(500e3);
  SawResponse saw = SawResponse::b3790();
  double lna_gain_db = 20.0;
  ShiftSettings shift;
  ComparatorSettings comparator;
  DemodMode mode = DemodMode::Vanilla;
  std::vector<double> distances{10, 25, 50, 75, 100, 125, 150, 175, 200};
  std::size_t n_frames = 100;
  std::size_t payload_len = 32;
  std::size_t repeats = 10;
  std::uint64_t seed = 1;
  double max_distance_m = 1000.0;
  double oversampling = 8.0;
  MacScenario mac;

  static ExperimentConfig defaults(const SymbolParams& p = SymbolParams{}) {
    ExperimentConfig c;
    c.symbol = p;
    c.link = LinkBudget::defaults(p.bw);
    c.link.rf_noise = calibrated_noise(p.bw);
    return c;
  }

  // Re-derives bandwidth-dependent link terms after the symbol changes.
  void retune_bandwidth(double bw) {
    const double old_bw = symbol.bw;
    symbol.bw = bw;
    if (std::isfinite(link.noise_floor_dbm))
      link.noise_floor_dbm += 10.0 * std::log10(bw / old_bw);
    link.noise_bw_hz = bw;
    if (link.rf_noise.flicker_corner_hz == old_bw / 4.0) link.rf_noise.flicker_corner_hz = bw / 4.0;
  }

  void disable_noise() {
    link.noise_floor_dbm = kNegInf;
    link.rf_noise.awgn_density = 0.0;
    link.rf_noise.dc_offset = link.rf_noise.flicker_gain = link.rf_noise.detector_density = 0.0;
  }

  std::size_t trials() const { return n_frames * repeats; }
  double sim_rate() const { return oversampling * symbol.bw; }

  FrontendConfig frontend() const {
    FrontendConfig fe;
    fe.saw = saw;
    fe.lna_gain_db = lna_gain_db;
    const double lpf = comparator.lpf_fraction * sampling_rate(symbol).configured_hz;
    fe.env.lpf_cutoff_hz = lpf;
    fe.shift = ShiftConfig::defaults(symbol.bw, lpf);
    if (shift.delta_f_hz > 0) fe.shift.delta_f_hz = shift.delta_f_hz;
    if (shift.if_bw_hz > 0) fe.shift.if_bw_hz = shift.if_bw_hz;
    if (shift.lpf_cutoff_hz > 0) fe.shift.lpf_cutoff_hz = shift.lpf_cutoff_hz;
    fe.shift.delta_phi_rad = shift.delta_phi_rad;
    fe.shift.if_gain_db = shift.if_gain_db;
    return fe;
  }

  void validate() const {
    symbol.validate();
    link.validate();
    saw.validate();
    if (n_frames < 1) throw ConfigError("n_frames must be at least 1");
    if (repeats < 1) throw ConfigError("repeats must be at least 1");
    if (payload_len < 1) throw ConfigError("payload length must be at least 1");
    if (distances.empty()) throw ConfigError("distance list is empty");
    for (double d : distances)
      if (!(d >= 1.0)) throw ConfigError("distances must be at least 1 m");
    if (!(max_distance_m >= 1.0)) throw ConfigError("max distance must be at least 1 m");
    if (!(oversampling >= 2.0)) throw ConfigError("oversampling must be at least 2");
    if (!(comparator.u_f > 0 && comparator.u_f < 1)) throw ConfigError("U_F must lie in (0, 1)");
    if (!(comparator.g_db >= 0)) throw ConfigError("G must be nonnegative");
    if (!(comparator.lpf_fraction > 0)) throw ConfigError("LPF fraction must be positive");
    const auto fe = frontend();
    fe.env.validate(sim_rate());
    fe.shift.validate(symbol.bw);
  }
};

struct Metrics {
  double ber = 0.0;
  double throughput_bps = 0.0;
  double prr = 0.0;
  double range_m = 0.0;
};

struct PointResult {
  double distance_m = 0.0;
  Metrics metrics;
  std::size_t frames = 0;
  std::size_t missed_frames = 0;
  std::size_t symbols = 0;
  std::size_t symbol_errors = 0;
};

// Worker count from SAIYAN_SIM_THREADS (unset or 0 = hardware concurrency).
inline unsigned sim_threads() {
  unsigned n = 0;
  if (const char* env = std::getenv("SAIYAN_SIM_THREADS")) n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = sim_threads()) {
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Silence of `guard` symbols on both sides of a frame.
inline ComplexStream pad_frame(const ComplexStream& body, const SymbolParams& p, double guard = 1.0) {
  const auto g = static_cast<std::size_t>(std::llround(guard * p.symbol_time() * body.rate));
  ComplexStream s;
  s.rate = body.rate;
  s.domain = body.domain;
  s.samples.reserve(body.size() + 2 * g);
  s.samples.assign(g, cplx{});
  s.samples.insert(s.samples.end(), body.samples.begin(), body.samples.end());
  s.samples.insert(s.samples.end(), g, cplx{});
  return s;
}

inline std::vector<std::uint32_t> random_payload(const SymbolParams& p, std::size_t len,
                                                 std::uint64_t seed) {
  Rng rng = make_rng(seed, SeedStream::Payload);
  std::uniform_int_distribution<std::uint32_t> pick(0, p.bins() - 1);
  std::vector<std::uint32_t> v(len);
  for (auto& x : v) x = pick(rng);
  return v;
}

// Runs trials for one parameter set. Trial i uses seed base_seed + i for its
// payload, channel noise and detector noise, at every distance.
class Simulator {
 public:
  explicit Simulator(ExperimentConfig cfg) : cfg_(std::move(cfg)), demod_(cfg_.symbol, cfg_.frontend()) {
    cfg_.validate();
    demod_.set_correlation_policy(cfg_.comparator.correlation_policy);
  }

  const ExperimentConfig& config() const { return cfg_; }
  const Demodulator& demodulator() const { return demod_; }

  ThresholdCalibration calibration(DemodMode mode, double distance_m) const {
    Frame probe{cfg_.symbol, std::vector<std::uint32_t>(cfg_.payload_len, 0)};
    auto link = cfg_.link;
    link.noise_floor_dbm = kNegInf;
    const auto rx = apply_channel(pad_frame(build_frame(probe, cfg_.sim_rate()), cfg_.symbol), link,
                                  distance_m, 0);
    return demod_.calibrate(rx, mode, cfg_.comparator.g_db, cfg_.comparator.u_f);
  }

  // Symbol errors of one trial (payload_len when the preamble is missed).
  std::size_t trial_errors(DemodMode mode, double distance_m, const ThresholdCalibration& cal,
                           std::size_t trial, bool* missed = nullptr) const {
    const std::uint64_t seed = cfg_.seed + trial;
    Frame f{cfg_.symbol, random_payload(cfg_.symbol, cfg_.payload_len, seed)};
    const auto rx = apply_channel(pad_frame(build_frame(f, cfg_.sim_rate()), cfg_.symbol), cfg_.link,
                                  distance_m, seed);
    const DetectorNoise noise{cfg_.link.rf_noise, seed};
    const auto res = demod_.demodulate(rx, mode, cal, f.payload.size(), &noise);
    if (missed) *missed = !res.has_value();
    if (!res) return f.payload.size();
    std::size_t errors = 0;
    for (std::size_t j = 0; j < f.payload.size(); ++j)
      if (!res->symbols[j] || *res->symbols[j] != f.payload[j]) ++errors;
    return errors;
  }

  PointResult run_point(DemodMode mode, double distance_m, std::size_t trials = 0) const {
    if (trials == 0) trials = cfg_.trials();
    const auto cal = calibration(mode, distance_m);
    std::vector<std::size_t> errors(trials);
    std::vector<std::uint8_t> missed(trials);
    parallel_for(trials, [&](std::size_t i) {
      bool m = false;
      errors[i] = trial_errors(mode, distance_m, cal, i, &m);
      missed[i] = m;
    });

    PointResult r;
    r.distance_m = distance_m;
    r.frames = trials;
    r.symbols = trials * cfg_.payload_len;
    std::size_t clean_frames = 0;
    for (std::size_t i = 0; i < trials; ++i) {
      r.symbol_errors += errors[i];
      r.missed_frames += missed[i];
      clean_frames += errors[i] == 0;
    }
    const double k = cfg_.symbol.k_bits;
    const double bits = static_cast<double>(r.symbols) * k;
    const double wrong_bits = static_cast<double>(r.symbol_errors) * k;
    Frame f{cfg_.symbol, std::vector<std::uint32_t>(cfg_.payload_len, 0)};
    r.metrics.ber = wrong_bits / bits;
    r.metrics.throughput_bps = (bits - wrong_bits) / (static_cast<double>(trials) * f.airtime());
    r.metrics.prr = static_cast<double>(clean_frames) / static_cast<double>(trials);
    return r;
  }

  std::vector<PointResult> run(DemodMode mode) const {
    std::vector<PointResult> out;
    for (double d : cfg_.distances) out.push_back(run_point(mode, d));
    return out;
  }

 private:
  ExperimentConfig cfg_;
  Demodulator demod_;
};

inline std::vector<PointResult> run_experiment(const ExperimentConfig& cfg) {
  return Simulator(cfg).run(cfg.mode);
}

inline constexpr double kRangeBerLimit = 0.01;

struct RangeResult {
  double range_m = 0.0;
  bool capped = false;
  std::string diagnostic;
};

// Largest integer distance in [1, max_distance_m] with BER < 1%, by
// bisection (BER assumed nondecreasing in distance).
inline RangeResult demod_range(const Simulator& sim, DemodMode mode, std::size_t trials = 0) {
  const auto& cfg = sim.config();
  auto ok = [&](double d) { return sim.run_point(mode, d, trials).metrics.ber < kRangeBerLimit; };
  RangeResult r;
  if (!ok(1.0)) {
    r.diagnostic = "BER >= 1% already at 1 m";
    return r;
  }
  double lo = 1.0;
  double hi = std::floor(cfg.max_distance_m);
  if (ok(hi)) {
    r.range_m = hi;
    r.capped = true;
    r.diagnostic = "BER < 1% up to the distance cap";
    return r;
  }
  while (hi - lo > 1.0) {
    const double mid = std::floor((lo + hi) / 2.0);
    (ok(mid) ? lo : hi) = mid;
  }
  r.range_m = lo;
  return r;
}

inline RangeResult demod_range(const ExperimentConfig& cfg, DemodMode mode) {
  return demod_range(Simulator(cfg), mode);
}

struct AblationRow {
  int k_bits = 0;
  double vanilla_m = 0, shifted_m = 0, correlated_m = 0;
  double r1() const { return vanilla_m > 0 ? shifted_m / vanilla_m : 0.0; }
  double r2() const { return shifted_m > 0 ? correlated_m / shifted_m : 0.0; }
};

// Ranges of the three demodulator stages under one channel and seed.
inline AblationRow ablation(const ExperimentConfig& cfg, std::size_t trials = 0) {
  const Simulator sim(cfg);
  AblationRow row;
  row.k_bits = cfg.symbol.k_bits;
  row.vanilla_m = demod_range(sim, DemodMode::Vanilla, trials).range_m;
  row.shifted_m = demod_range(sim, DemodMode::Shifted, trials).range_m;
  row.correlated_m = demod_range(sim, DemodMode::Correlated, trials).range_m;
  return row;
}

struct RlcResult {
  double q;
  double c_farad;
  double c_alt_farad;  // dw / (w0^2 R)
};

// Published capacitance, printed next to the computed one.
inline constexpr const char* kPrintedRlcFigure = "5.2e-14 pF";

inline RlcResult rlc_capacitance(double f0_hz, double delta_f_hz, double r_ohm) {
  if (!(f0_hz > 0) || !(delta_f_hz > 0) || !(r_ohm > 0))
    throw std::domain_error("RLC inputs must be positive");
  const double w0 = kTwoPi * f0_hz;
  const double dw = kTwoPi * delta_f_hz;
  const double q = w0 / dw;
  return {q, 1.0 / (q * w0 * r_ohm), dw / (w0 * w0 * r_ohm)};
}

// ---- config I/O ----

inline nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json saw_table = json::array();
  for (const auto& [f, g] : c.saw.gain_table) saw_table.push_back({f, g});
  const auto& n = c.link.rf_noise;
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {
      {"symbol", {{"sf", c.symbol.sf}, {"bw_hz", c.symbol.bw}, {"k_bits", c.symbol.k_bits},
                  {"f_carrier_hz", c.symbol.f_carrier}}},
      {"link", {{"tx_power_dbm", c.link.tx_power_dbm}, {"tx_gain_dbi", c.link.tx_gain_dbi},
                {"rx_gain_dbi", c.link.rx_gain_dbi}, {"pl0_db", c.link.pl0_db},
                {"pl_exponent", c.link.pl_exponent},
                {"noise_floor_dbm", finite_or_null(c.link.noise_floor_dbm)},
                {"noise_bw_hz", c.link.noise_bw_hz}}},
      {"noise", {{"awgn_density", n.awgn_density}, {"dc_offset", n.dc_offset},
                 {"flicker_corner_hz", n.flicker_corner_hz}, {"flicker_gain", n.flicker_gain},
                 {"detector_density", n.detector_density}}},
      {"saw", {{"band_lo_hz", c.saw.band_lo_hz}, {"band_hi_hz", c.saw.band_hi_hz},
               {"insertion_loss_db", c.saw.insertion_loss_db}, {"lna_gain_db", c.lna_gain_db},
               {"table", saw_table}}},
      {"shift", {{"delta_f_hz", c.shift.delta_f_hz}, {"delta_phi_rad", c.shift.delta_phi_rad},
                 {"if_gain_db", c.shift.if_gain_db}, {"if_bw_hz", c.shift.if_bw_hz},
                 {"lpf_cutoff_hz", c.shift.lpf_cutoff_hz}}},
      {"comparator", {{"g_db", c.comparator.g_db}, {"u_f", c.comparator.u_f},
                      {"lpf_fraction", c.comparator.lpf_fraction},
                      {"correlation_policy", std::string(to_string(c.comparator.correlation_policy))}}},
      {"scenario",
       {{"mode", std::string(to_string(c.mode))},
        {"distances_m", c.distances},
        {"n_frames", c.n_frames},
        {"payload_len", c.payload_len},
        {"repeats", c.repeats},
        {"seed", c.seed},
        {"max_distance_m", c.max_distance_m},
        {"oversampling", c.oversampling},
        {"mac",
         {{"n_tags", c.mac.n_tags}, {"n_slots", c.mac.n_slots}, {"p_uplink", c.mac.p_uplink},
          {"max_retx", c.mac.max_retx}, {"n_packets", c.mac.n_packets},
          {"aloha_rounds", c.mac.aloha_rounds}, {"p_jammed", c.mac.p_jammed},
          {"p_clean", c.mac.p_clean}, {"hop_channel", c.mac.hop_channel},
          {"downlink", c.mac.downlink}, {"p_downlink", c.mac.p_downlink},
          {"downlink_distance_m", c.mac.downlink_distance_m}, {"window", c.mac.window}}}}},
  };
}

namespace detail {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    if constexpr (std::is_floating_point_v<T>) {
      if (j.at(key).is_null()) {
        out = kNegInf;
        return;
      }
    }
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace detail

// Missing keys keep their defaults; the link budget is re-derived from the
// symbol bandwidth unless pl0/noise floor are given explicitly.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::read_field;
  check_keys(j, {"symbol", "link", "noise", "saw", "shift", "comparator", "scenario"}, "config");

  SymbolParams sym;
  if (j.contains("symbol")) {
    const auto& s = j["symbol"];
    check_keys(s, {"sf", "bw_hz", "k_bits", "f_carrier_hz"}, "symbol");
    read_field(s, "sf", sym.sf);
    read_field(s, "bw_hz", sym.bw);
    read_field(s, "k_bits", sym.k_bits);
    read_field(s, "f_carrier_hz", sym.f_carrier);
  }
  sym.validate();
  ExperimentConfig c = ExperimentConfig::defaults(sym);

  bool pl0_given = false;
  if (j.contains("link")) {
    const auto& l = j["link"];
    check_keys(l, {"tx_power_dbm", "tx_gain_dbi", "rx_gain_dbi", "pl0_db", "pl_exponent",
                   "noise_floor_dbm", "noise_bw_hz", "noise_figure_db"},
               "link");
    read_field(l, "tx_power_dbm", c.link.tx_power_dbm);
    read_field(l, "tx_gain_dbi", c.link.tx_gain_dbi);
    read_field(l, "rx_gain_dbi", c.link.rx_gain_dbi);
    read_field(l, "pl_exponent", c.link.pl_exponent);
    if (l.contains("noise_figure_db")) {
      double nf = 6.0;
      read_field(l, "noise_figure_db", nf);
      c.link.noise_floor_dbm = default_noise_floor_dbm(sym.bw, nf);
    }
    read_field(l, "noise_floor_dbm", c.link.noise_floor_dbm);
    read_field(l, "noise_bw_hz", c.link.noise_bw_hz);
    pl0_given = l.contains("pl0_db");
    read_field(l, "pl0_db", c.link.pl0_db);
  }
  if (!pl0_given)
    c.link.pl0_db = c.link.solve_pl0(LinkBudget::kSensitivityDistanceM, LinkBudget::kSensitivityDbm);

  if (j.contains("noise")) {
    const auto& n = j["noise"];
    check_keys(n, {"awgn_density", "dc_offset", "flicker_corner_hz", "flicker_gain",
                   "detector_density", "enabled"},
               "noise");
    auto& m = c.link.rf_noise;
    read_field(n, "awgn_density", m.awgn_density);
    read_field(n, "dc_offset", m.dc_offset);
    read_field(n, "flicker_corner_hz", m.flicker_corner_hz);
    read_field(n, "flicker_gain", m.flicker_gain);
    read_field(n, "detector_density", m.detector_density);
    bool enabled = true;
    read_field(n, "enabled", enabled);
    if (!enabled) c.disable_noise();
    m.validate();
  }

  if (j.contains("saw")) {
    const auto& s = j["saw"];
    check_keys(s, {"band_lo_hz", "band_hi_hz", "insertion_loss_db", "lna_gain_db", "table", "table_csv"},
               "saw");
    if (s.contains("table_csv")) {
      std::ifstream in(s["table_csv"].get<std::string>());
      if (!in) throw ConfigError("cannot open SAW table " + s["table_csv"].get<std::string>());
      c.saw = SawResponse::from_csv(in);
    }
    if (s.contains("table")) {
      c.saw.gain_table.clear();
      for (const auto& row : s["table"]) {
        if (!row.is_array() || row.size() != 2) throw ConfigError("SAW table rows must be [freq, gain]");
        c.saw.gain_table.emplace_back(row[0].get<double>(), row[1].get<double>());
      }
    }
    read_field(s, "band_lo_hz", c.saw.band_lo_hz);
    read_field(s, "band_hi_hz", c.saw.band_hi_hz);
    read_field(s, "insertion_loss_db", c.saw.insertion_loss_db);
    read_field(s, "lna_gain_db", c.lna_gain_db);
  }

  if (j.contains("shift")) {
    const auto& s = j["shift"];
    check_keys(s, {"delta_f_hz", "delta_phi_rad", "if_gain_db", "if_bw_hz", "lpf_cutoff_hz"}, "shift");
    read_field(s, "delta_f_hz", c.shift.delta_f_hz);
    read_field(s, "delta_phi_rad", c.shift.delta_phi_rad);
    read_field(s, "if_gain_db", c.shift.if_gain_db);
    read_field(s, "if_bw_hz", c.shift.if_bw_hz);
    read_field(s, "lpf_cutoff_hz", c.shift.lpf_cutoff_hz);
  }

  if (j.contains("comparator")) {
    const auto& s = j["comparator"];
    check_keys(s, {"g_db", "u_f", "lpf_fraction", "correlation_policy"}, "comparator");
    if (s.contains("correlation_policy"))
      c.comparator.correlation_policy = parse_policy(s["correlation_policy"].get<std::string>());
    read_field(s, "g_db", c.comparator.g_db);
    read_field(s, "u_f", c.comparator.u_f);
    read_field(s, "lpf_fraction", c.comparator.lpf_fraction);
  }

  if (j.contains("scenario")) {
    const auto& s = j["scenario"];
    check_keys(s, {"mode", "distances_m", "n_frames", "payload_len", "repeats", "seed",
                   "max_distance_m", "oversampling", "mac"},
               "scenario");
    if (s.contains("mode")) c.mode = parse_mode(s["mode"].get<std::string>());
    read_field(s, "distances_m", c.distances);
    read_field(s, "n_frames", c.n_frames);
    read_field(s, "payload_len", c.payload_len);
    read_field(s, "repeats", c.repeats);
    read_field(s, "seed", c.seed);
    read_field(s, "max_distance_m", c.max_distance_m);
    read_field(s, "oversampling", c.oversampling);
    if (s.contains("mac")) {
      const auto& m = s["mac"];
      check_keys(m, {"n_tags", "n_slots", "p_uplink", "max_retx", "n_packets", "aloha_rounds",
                     "p_jammed", "p_clean", "hop_channel", "downlink", "p_downlink",
                     "downlink_distance_m", "window"},
                 "scenario.mac");
      read_field(m, "n_tags", c.mac.n_tags);
      read_field(m, "n_slots", c.mac.n_slots);
      read_field(m, "p_uplink", c.mac.p_uplink);
      read_field(m, "max_retx", c.mac.max_retx);
      read_field(m, "n_packets", c.mac.n_packets);
      read_field(m, "aloha_rounds", c.mac.aloha_rounds);
      read_field(m, "p_jammed", c.mac.p_jammed);
      read_field(m, "p_clean", c.mac.p_clean);
      read_field(m, "hop_channel", c.mac.hop_channel);
      read_field(m, "downlink", c.mac.downlink);
      read_field(m, "p_downlink", c.mac.p_downlink);
      read_field(m, "downlink_distance_m", c.mac.downlink_distance_m);
      read_field(m, "window", c.mac.window);
      if (c.mac.downlink != "abstract" && c.mac.downlink != "pipeline")
        throw ConfigError("downlink must be 'abstract' or 'pipeline'");
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(to_json(c).dump()));
  return buf;
}

// ---- MAC over the full receive chain ----

// Downlink that sends the encoded command as a frame through the channel and
// demodulator at `distance_m`.
inline mac::DownlinkChannel pipeline_downlink(std::shared_ptr<const Simulator> sim, DemodMode mode,
                                              double distance_m) {
  return [sim, mode, distance_m](const mac::DownlinkCommand& cmd,
                                 std::uint64_t seed) -> std::optional<mac::DownlinkCommand> {
    const auto& cfg = sim->config();
    const auto bytes = mac::encode_command(cmd);
    Frame f{cfg.symbol, mac::bytes_to_symbols(bytes, cfg.symbol.k_bits)};
    const auto rx =
        apply_channel(pad_frame(build_frame(f, cfg.sim_rate()), cfg.symbol), cfg.link, distance_m, seed);
    const DetectorNoise noise{cfg.link.rf_noise, seed};
    const auto res = sim->demodulator().demodulate(rx, mode, sim->calibration(mode, distance_m),
                                                   f.payload.size(), &noise);
    if (!res) return std::nullopt;
    std::vector<std::uint32_t> syms;
    for (const auto& s : res->symbols) {
      if (!s) return std::nullopt;
      syms.push_back(*s);
    }
    return mac::decode_command(mac::symbols_to_bytes(syms, cfg.symbol.k_bits, bytes.size()));
  };
}

// ---- CSV ----

namespace csv {

inline std::string integer(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%lld", static_cast<long long>(std::llround(v)));
  return b;
}

inline std::string ratio(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6f", v);
  return b;
}

}  // namespace csv

inline std::string range_csv(DemodMode mode, const SymbolParams& p, const RangeResult& r) {
  std::ostringstream o;
  o << "mode,sf,bw_hz,cr,range_m\n";
  o << to_string(mode) << ',' << p.sf << ',' << csv::integer(p.bw) << ',' << p.k_bits << ','
    << csv::integer(r.range_m) << '\n';
  return o.str();
}

inline std::string points_csv(DemodMode mode, const SymbolParams& p, const std::vector<PointResult>& pts) {
  std::ostringstream o;
  o << "mode,sf,bw_hz,cr,distance_m,ber,throughput_bps,prr\n";
  for (const auto& r : pts)
    o << to_string(mode) << ',' << p.sf << ',' << csv::integer(p.bw) << ',' << p.k_bits << ','
      << csv::integer(r.distance_m) << ',' << csv::ratio(r.metrics.ber) << ','
      << csv::integer(r.metrics.throughput_bps) << ',' << csv::ratio(r.metrics.prr) << '\n';
  return o.str();
}

struct SweepRow {
  double key;
  PointResult point;
};

// Column name for a sweep axis: sf, bw, cr or distance.
inline std::string sweep_column(const std::string& axis) {
  if (axis == "sf") return "sf";
  if (axis == "bw") return "bw_hz";
  if (axis == "cr") return "cr";
  if (axis == "distance") return "distance_m";
  throw ConfigError("unknown sweep axis: " + axis);
}

// One row per (value, distance); the distance axis sweeps cfg.distances
// replaced by `values`.
inline std::vector<SweepRow> sweep(const ExperimentConfig& base, const std::string& axis,
                                   const std::vector<double>& values) {
  sweep_column(axis);
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepRow> rows;
  if (axis == "distance") {
    auto cfg = base;
    cfg.distances = values;
    for (const auto& p : run_experiment(cfg)) rows.push_back({p.distance_m, p});
    return rows;
  }
  for (double v : values) {
    auto cfg = base;
    if (axis == "sf") cfg.symbol.sf = static_cast<int>(v);
    if (axis == "cr") cfg.symbol.k_bits = static_cast<int>(v);
    if (axis == "bw") cfg.retune_bandwidth(v);
    if (axis != "bw" && (v != std::floor(v))) throw ConfigError("sweep value must be an integer");
    for (const auto& p : run_experiment(cfg)) rows.push_back({v, p});
  }
  return rows;
}

inline std::string sweep_csv(const std::string& axis, const std::vector<SweepRow>& rows) {
  std::ostringstream o;
  const auto col = sweep_column(axis);
  if (axis == "distance")
    o << "distance_m,ber,throughput_bps\n";
  else
    o << col << ",distance_m,ber,throughput_bps\n";
  for (const auto& r : rows) {
    if (axis != "distance") o << csv::integer(r.key) << ',';
    o << csv::integer(r.point.distance_m) << ',' << csv::ratio(r.point.metrics.ber) << ','
      << csv::integer(r.point.metrics.throughput_bps) << '\n';
  }
  return o.str();
}

inline std::string ablation_csv(const SymbolParams& p, const std::vector<AblationRow>& rows) {
  std::ostringstream o;
  o << "sf,bw_hz,cr,vanilla_m,shifted_m,correlated_m,r1,r2\n";
  for (const auto& r : rows)
    o << p.sf << ',' << csv::integer(p.bw) << ',' << r.k_bits << ',' << csv::integer(r.vanilla_m) << ','
      << csv::integer(r.shifted_m) << ',' << csv::integer(r.correlated_m) << ',' << csv::ratio(r.r1())
      << ',' << csv::ratio(r.r2()) << '\n';
  return o.str();
}

}  // namespace saiyan
