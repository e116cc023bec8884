#include <gtest/gtest.h>

#include <cstdlib>

#include "saiyan/harness.hpp"

using namespace saiyan;

namespace {

ExperimentConfig small(int sf = 7, double bw = 500e3, int k = 2) {
  auto c = ExperimentConfig::defaults(SymbolParams::make(sf, bw, k));
  c.n_frames = 2;
  c.repeats = 2;
  c.payload_len = 16;
  c.distances = {50, 150};
  c.seed = 3;
  return c;
}

}  // namespace

TEST(Rlc, FormsAgreeAndValue) {
  const auto r = rlc_capacitance(433e6, 500e3, 50);
  EXPECT_NEAR(r.c_farad / r.c_alt_farad, 1.0, 1e-12);
  EXPECT_NEAR(r.c_farad, 8.49e-15, 1e-17);
  EXPECT_NEAR(r.q, 866.0, 1e-9);
  EXPECT_NEAR(rlc_capacitance(433e6, 500e3, 100).c_farad, r.c_farad / 2, 1e-27);
  EXPECT_THROW(rlc_capacitance(0, 1, 1), std::domain_error);
  EXPECT_THROW(rlc_capacitance(1, -1, 1), std::domain_error);
  EXPECT_THROW(rlc_capacitance(1, 1, 0), std::domain_error);
}

TEST(Experiment, NoiselessBerZeroAndAirtimeThroughput) {
  auto c = small();
  c.disable_noise();
  for (auto mode : {DemodMode::Vanilla, DemodMode::Shifted, DemodMode::Correlated}) {
    c.mode = mode;
    for (const auto& pt : run_experiment(c)) {
      EXPECT_EQ(pt.metrics.ber, 0.0) << to_string(mode);
      EXPECT_EQ(pt.metrics.prr, 1.0);
      const double ideal = 2 * 500e3 / 128 * (16.0 / (16.0 + 12.25));
      EXPECT_NEAR(pt.metrics.throughput_bps, ideal, 1e-6 * ideal);
    }
  }
}

TEST(Experiment, RawRateAtK5) {
  auto c = small(7, 500e3, 5);
  c.disable_noise();
  c.distances = {10};
  const auto pt = run_experiment(c).front();
  const double raw = 5 * 500e3 / 128;
  EXPECT_NEAR(raw, 19531.25, 1e-9);
  EXPECT_LE(pt.metrics.throughput_bps, raw);
  EXPECT_NEAR(pt.metrics.throughput_bps, raw * 16 / 28.25, 1e-6 * raw);
}

TEST(Experiment, ThroughputScalesWithK) {
  auto c1 = small(7, 500e3, 1);
  auto c5 = small(7, 500e3, 5);
  c1.distances = c5.distances = {10};
  const double t1 = run_experiment(c1).front().metrics.throughput_bps;
  const double t5 = run_experiment(c5).front().metrics.throughput_bps;
  EXPECT_NEAR(t5 / t1, 5.0, 0.1);
}

TEST(Experiment, MetricSanityUnderNoise) {
  auto c = small();
  c.distances = {50, 250, 600};
  const double ideal = 2 * 500e3 / 128;
  for (const auto& pt : run_experiment(c)) {
    EXPECT_GE(pt.metrics.ber, 0.0);
    EXPECT_LE(pt.metrics.ber, 1.0);
    EXPECT_LE(pt.metrics.throughput_bps, ideal);
    EXPECT_GE(pt.metrics.prr, 0.0);
    EXPECT_LE(pt.metrics.prr, 1.0);
  }
}

TEST(Experiment, BerGrowsWithDistance) {
  auto c = small();
  c.n_frames = 10;
  c.distances = {50, 150, 300, 600};
  const auto pts = run_experiment(c);
  EXPECT_LT(pts.front().metrics.ber, 0.01);
  EXPECT_GT(pts.back().metrics.ber, 0.1);
  for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_GE(pts[i].metrics.ber + 0.02, pts[i - 1].metrics.ber);
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
  auto c = small();
  c.distances = {200};
  setenv("SAIYAN_SIM_THREADS", "1", 1);
  const auto a = run_experiment(c).front();
  setenv("SAIYAN_SIM_THREADS", "4", 1);
  const auto b = run_experiment(c).front();
  unsetenv("SAIYAN_SIM_THREADS");
  EXPECT_EQ(a.symbol_errors, b.symbol_errors);
  EXPECT_EQ(a.missed_frames, b.missed_frames);
}

TEST(Range, CapWhenNoiseless) {
  auto c = small();
  c.disable_noise();
  c.n_frames = c.repeats = 1;
  c.max_distance_m = 300;
  const auto r = demod_range(c, DemodMode::Vanilla);
  EXPECT_DOUBLE_EQ(r.range_m, 300.0);
  EXPECT_TRUE(r.capped);
}

TEST(Range, ZeroWithDiagnostic) {
  auto c = small();
  c.n_frames = c.repeats = 1;
  c.link.noise_floor_dbm = 10.0;
  const auto r = demod_range(c, DemodMode::Vanilla);
  EXPECT_EQ(r.range_m, 0.0);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Range, BisectionIsInteger) {
  auto c = small();
  c.n_frames = 4;
  c.repeats = 1;
  c.max_distance_m = 600;
  const auto r = demod_range(c, DemodMode::Vanilla);
  EXPECT_GT(r.range_m, 1.0);
  EXPECT_LT(r.range_m, 600.0);
  EXPECT_EQ(r.range_m, std::floor(r.range_m));
  const Simulator sim(c);
  EXPECT_LT(sim.run_point(DemodMode::Vanilla, r.range_m).metrics.ber, kRangeBerLimit);
  EXPECT_GE(sim.run_point(DemodMode::Vanilla, r.range_m + 1).metrics.ber, kRangeBerLimit);
}

TEST(Config, JsonRoundTrip) {
  auto c = small(9, 250e3, 3);
  c.mode = DemodMode::Correlated;
  c.mac.n_tags = 4;
  c.comparator.correlation_policy = CorrelationPolicy::Erasure;
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  auto d = c;
  d.seed = 4;
  EXPECT_NE(config_hash(d), config_hash(c));
}

TEST(Config, NoiselessRoundTripKeepsInfiniteFloor) {
  auto c = small();
  c.disable_noise();
  const auto j = to_json(c);
  EXPECT_TRUE(j["link"]["noise_floor_dbm"].is_null());
  EXPECT_EQ(config_from_json(j).link.noise_floor_dbm, kNegInf);
}

TEST(Config, RejectsBadInput) {
  using nlohmann::json;
  EXPECT_THROW(config_from_json(json{{"extra", 1}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"symbol", {{"sfx", 7}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"symbol", {{"sf", 13}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"symbol", {{"sf", "seven"}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"scenario", {{"n_frames", 0}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"scenario", {{"distances_m", json::array()}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"scenario", {{"mode", "best"}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"scenario", {{"mac", {{"downlink", "carrier pigeon"}}}}}}), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, NoiseSwitch) {
  using nlohmann::json;
  const auto c = config_from_json(json{{"noise", {{"enabled", false}}}});
  EXPECT_EQ(c.link.noise_floor_dbm, kNegInf);
  EXPECT_EQ(c.link.rf_noise.detector_density, 0.0);
}

TEST(Config, DefaultsSolveSensitivity) {
  const auto c = config_from_json(nlohmann::json::object());
  EXPECT_NEAR(rss_dbm(c.link, 180.0), -85.8, 0.1);
}

TEST(Csv, Formats) {
  const auto p = SymbolParams::make(7, 500e3, 2);
  RangeResult r;
  r.range_m = 148.6;
  EXPECT_EQ(range_csv(DemodMode::Vanilla, p, r), "mode,sf,bw_hz,cr,range_m\nvanilla,7,500000,2,149\n");

  PointResult pt;
  pt.distance_m = 60;
  pt.metrics.ber = 0.0123456789;
  pt.metrics.throughput_bps = 2212.4;
  EXPECT_EQ(sweep_csv("cr", {{1, pt}}), "cr,distance_m,ber,throughput_bps\n1,60,0.012346,2212\n");
  EXPECT_EQ(sweep_csv("bw", {{125e3, pt}}), "bw_hz,distance_m,ber,throughput_bps\n125000,60,0.012346,2212\n");
  EXPECT_EQ(sweep_csv("distance", {{60, pt}}), "distance_m,ber,throughput_bps\n60,0.012346,2212\n");
  EXPECT_THROW(sweep_column("power"), ConfigError);

  AblationRow row{2, 100, 150, 320};
  EXPECT_EQ(ablation_csv(p, {row}),
            "sf,bw_hz,cr,vanilla_m,shifted_m,correlated_m,r1,r2\n7,500000,2,100,150,320,1.500000,2.133333\n");
}

TEST(Sweep, RowsPerValueAndDistance) {
  auto c = small();
  c.disable_noise();
  c.n_frames = c.repeats = 1;
  const auto rows = sweep(c, "cr", {1, 3});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].key, 1);
  EXPECT_EQ(rows[3].key, 3);
  EXPECT_EQ(rows[3].point.distance_m, 150);
  EXPECT_THROW(sweep(c, "cr", {1.5}), ConfigError);
  EXPECT_THROW(sweep(c, "cr", {}), ConfigError);
}

TEST(PipelineDownlink, DeliversCommandNearby) {
  auto c = small();
  auto sim = std::make_shared<const Simulator>(c);
  const auto link = pipeline_downlink(sim, DemodMode::Correlated, 30.0);
  const mac::DownlinkCommand cmd{mac::Hop{2}, mac::Unicast{5}};
  const auto got = link(cmd, 17);
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(*got, cmd);
  const auto far = pipeline_downlink(sim, DemodMode::Vanilla, 5000.0);
  EXPECT_FALSE(far(cmd, 17).has_value());
}

TEST(Experiment, ShiftedBeatsVanillaWhereVanillaFails) {
  auto c = ExperimentConfig::defaults(SymbolParams::make(7, 500e3, 2));
  const Simulator sim(c);
  const std::size_t trials = 320;  // 10240 symbols
  const auto v = sim.run_point(DemodMode::Vanilla, 90, trials);
  const auto s = sim.run_point(DemodMode::Shifted, 90, trials);
  ASSERT_GE(v.symbols, 10000u);
  EXPECT_GT(v.metrics.ber, 0.01);
  EXPECT_LT(s.metrics.ber, v.metrics.ber);
}

TEST(Experiment, WidebandJammerBreaksLink) {
  auto c = ExperimentConfig::defaults(SymbolParams::make(7, 500e3, 2));
  const Simulator sim(c);
  const double d = 50;
  const auto cal = sim.calibration(DemodMode::Vanilla, d);
  Jammer jam;
  jam.kind = JammerKind::Wideband;
  jam.center_offset_hz = c.symbol.bw / 2;
  jam.bandwidth_hz = c.symbol.bw;
  jam.power_dbm = rss_dbm(c.link, d) + 20;
  std::size_t errors = 0, symbols = 0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    Frame f{c.symbol, random_payload(c.symbol, c.payload_len, t)};
    auto rx = apply_channel(pad_frame(build_frame(f, c.sim_rate()), c.symbol), c.link, d, t);
    rx = inject_interferer(rx, jam, t + 100);
    const DetectorNoise noise{c.link.rf_noise, t};
    const auto r = sim.demodulator().demodulate(rx, DemodMode::Vanilla, cal, f.payload.size(), &noise);
    for (std::size_t j = 0; j < f.payload.size(); ++j) errors += !r || r->symbols[j] != f.payload[j];
    symbols += f.payload.size();
  }
  EXPECT_GT(static_cast<double>(errors) / static_cast<double>(symbols), 0.10);
}
