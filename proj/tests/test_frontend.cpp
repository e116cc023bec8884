#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "saiyan/demodulator.hpp"
#include "saiyan/fft.hpp"
#include "saiyan/frontend.hpp"
#include "saiyan/waveform.hpp"

using namespace saiyan;

namespace {

ComplexStream tone(double f, double rate, std::size_t n, double a = 1.0) {
  ComplexStream s;
  s.rate = rate;
  for (std::size_t i = 0; i < n; ++i) s.samples.push_back(std::polar(a, kTwoPi * f * i / rate));
  return s;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<double> magnitude(const ComplexStream& s) {
  std::vector<double> m;
  for (auto x : s.samples) m.push_back(std::abs(x));
  return m;
}

}  // namespace

TEST(Saw, CriticalBandSpans) {
  const auto saw = SawResponse::b3790();
  EXPECT_DOUBLE_EQ(saw_gain_db(saw, 434.0e6), -10.0);
  EXPECT_NEAR(saw_gain_db(saw, 434.0e6) - saw_gain_db(saw, 433.5e6), 25.0, 1e-9);
  EXPECT_NEAR(saw_gain_db(saw, 434.0e6) - saw_gain_db(saw, 433.75e6), 9.5, 1e-9);
  EXPECT_NEAR(saw_gain_db(saw, 434.0e6) - saw_gain_db(saw, 433.875e6), 7.2, 1e-9);
}

TEST(Saw, MonotoneAndClamped) {
  const auto saw = SawResponse::b3790();
  for (double f = 433.5e6; f < 434.0e6; f += 1e3) EXPECT_LT(saw_gain_db(saw, f), saw_gain_db(saw, f + 1e3));
  EXPECT_DOUBLE_EQ(saw_gain_db(saw, 433.0e6), saw_gain_db(saw, 433.5e6));
  EXPECT_DOUBLE_EQ(saw_gain_db(saw, 434.1e6), -10.0);
  EXPECT_DOUBLE_EQ(saw_gain_db(saw, 435.0e6), saw_gain_db(saw, 433.5e6));
}

TEST(Saw, FromCsv) {
  std::istringstream in("frequency_hz,gain_db\n1000,-5\n2000,-1\n3000,0\n");
  auto r = SawResponse::from_csv(in, 4.0);
  EXPECT_DOUBLE_EQ(saw_gain_db(r, 1500), -3.0 - 4.0);
  std::istringstream bad("1000,-5\n2000,-6\n");
  EXPECT_THROW(SawResponse::from_csv(bad), ConfigError);
}

TEST(ApplySaw, ToneAtBwGetsMaxGain) {
  auto p = SymbolParams::make(7, 500e3, 2);
  auto out = apply_saw(tone(p.bw, 8 * p.bw, 2000), SawResponse::b3790(), p.f_carrier);
  for (double m : magnitude(out)) EXPECT_NEAR(m, db_to_linear_amplitude(-10.0), 1e-9);
}

TEST(ApplySaw, PeakAtPeakTime) {
  for (auto [sf, bw, k] : {std::tuple{7, 500e3, 2}, {9, 250e3, 3}, {8, 125e3, 1}}) {
    auto p = SymbolParams::make(sf, bw, k);
    const double rate = 8 * bw;
    for (std::uint32_t v = 0; v < p.bins(); ++v) {
      auto out = apply_saw(gen_chirp(p, v, rate), SawResponse::b3790(), p.f_carrier);
      const double t = static_cast<double>(argmax(magnitude(out))) / rate;
      EXPECT_NEAR(t, peak_time(p, v), 1.0 / rate + 1e-12) << sf << " " << v;
    }
  }
}

TEST(ApplySaw, PeakOrdering) {
  auto p = SymbolParams::make(7, 500e3, 3);
  const double rate = 8 * p.bw;
  std::size_t prev = SIZE_MAX;
  for (std::uint32_t v = 0; v < p.bins(); ++v) {
    auto i = argmax(magnitude(apply_saw(gen_chirp(p, v, rate), SawResponse::b3790(), p.f_carrier)));
    EXPECT_LT(i, prev);
    prev = i;
  }
}

TEST(ApplySaw, ShortStream) {
  ComplexStream s;
  s.rate = 1e6;
  s.samples = {cplx{1, 0}};
  EXPECT_THROW(apply_saw(s, SawResponse::b3790(), 433.5e6), std::domain_error);
}

TEST(EnvelopeDetect, ToneGivesHalfSquare) {
  EnvelopeDetectorConfig cfg{2.0, 20e3};
  auto out = envelope_detect(tone(100e3, 4e6, 8192, 0.3), cfg);
  // away from the filter edge transients
  for (std::size_t i = 2000; i + 2000 < out.size(); ++i) EXPECT_NEAR(out.samples[i], 2.0 * 0.09 / 2, 1e-9);
}

TEST(EnvelopeDetect, ZeroInZeroOut) {
  EnvelopeDetectorConfig cfg{1.0, 20e3};
  ComplexStream z;
  z.rate = 4e6;
  z.samples.assign(1000, cplx{});
  for (double v : envelope_detect(z, cfg).samples) EXPECT_EQ(v, 0.0);
}

TEST(EnvelopeDetect, NonNegativeWithNoise) {
  EnvelopeDetectorConfig cfg{1.0, 20e3};
  NoiseModel m;
  m.detector_density = 1e-3;
  m.flicker_gain = 0.5;
  DetectorNoise dn{m, 3};
  for (double v : envelope_detect(tone(0, 4e6, 5000, 0.1), cfg, &dn).samples) EXPECT_GE(v, 0.0);
}

TEST(EnvelopeDetect, TwoToneBeatMatchesCrossTerm) {
  const double rate = 4e6;
  const std::size_t n = 1 << 15;
  const double df = rate / n;
  const double f1 = 2000 * df, f2 = 2100 * df;  // beat at 100 bins ~ 12 kHz
  auto a = tone(f1, rate, n, 0.5);
  auto b = tone(f2, rate, n, 0.2);
  for (std::size_t i = 0; i < n; ++i) a.samples[i] += b.samples[i];
  EnvelopeDetectorConfig cfg{1.0, 40e3};
  auto out = envelope_detect(a, cfg);
  const auto p = fft::periodogram(std::span<const double>(out.samples));
  const double beat = std::abs(f1 - f2);
  const double h = gaussian_lowpass(beat, cfg.lpf_cutoff_hz);
  const double expected = std::pow(cfg.k_att * 0.5 * 0.2 * h, 2) / 2.0;
  EXPECT_NEAR(10 * std::log10(p[100] / expected), 0.0, 0.5);
}

TEST(SquareLaw, SelfMixingDecompositionReal) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    RealStream st, sn, sum;
    st.rate = sn.rate = sum.rate = 1e6;
    for (int i = 0; i < 256; ++i) {
      st.samples.push_back(g(rng));
      sn.samples.push_back(0.3 * g(rng));
      sum.samples.push_back(st.samples.back() + sn.samples.back());
    }
    const double k = 0.7;
    auto y = square_law(sum, k);
    for (int i = 0; i < 256; ++i) {
      const double s = st.samples[i], n = sn.samples[i];
      const double expect = k * (s * s + 2 * s * n + n * n);
      EXPECT_NEAR(y.samples[i], expect, 1e-6 * std::max(1e-12, std::abs(expect)));
    }
  }
}

TEST(SquareLaw, SelfMixingDecompositionComplex) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0, 1);
  ComplexStream st, sn, sum;
  st.rate = sn.rate = sum.rate = 1e6;
  for (int i = 0; i < 512; ++i) {
    st.samples.emplace_back(g(rng), g(rng));
    sn.samples.emplace_back(g(rng), g(rng));
    sum.samples.push_back(st.samples.back() + sn.samples.back());
  }
  auto y = square_law(sum, 1.0);
  auto ys = square_law(st, 1.0);
  auto yn = square_law(sn, 1.0);
  for (int i = 0; i < 512; ++i) {
    const double cross = std::real(st.samples[i] * std::conj(sn.samples[i]));
    const double expect = ys.samples[i] + yn.samples[i] + cross;
    EXPECT_NEAR(y.samples[i], expect, 1e-6 * std::abs(expect) + 1e-15);
  }
}

namespace {

struct ShiftFixture : ::testing::Test {
  SymbolParams p = SymbolParams::make(7, 500e3, 2);
  FrontendConfig fe = default_frontend(p);
  double rate = 8 * p.bw;

  ComplexStream saw_frame() const {
    Frame f{p, {0, 1, 2, 3, 2, 1}};
    auto s = build_frame(f, rate, 1e-3);
    return apply_gain_db(apply_saw(s, fe.saw, p.f_carrier), fe.lna_gain_db);
  }
};

}  // namespace

TEST_F(ShiftFixture, ZeroInZeroOut) {
  ComplexStream z;
  z.rate = rate;
  z.samples.assign(4096, cplx{});
  for (double v : cyclic_shift(z, fe.shift, fe.env).samples) EXPECT_NEAR(v, 0.0, 1e-30);
}

TEST_F(ShiftFixture, NoiselessMatchesScaledEnvelope) {
  const auto x = saw_frame();
  const auto plain = envelope_detect(x, fe.env);
  const auto shifted = cyclic_shift(x, fe.shift, fe.env);
  const double g = db_to_linear_amplitude(fe.shift.if_gain_db) * std::cos(fe.shift.delta_phi_rad);
  const double peak = *std::max_element(plain.samples.begin(), plain.samples.end());
  double worst = 0;
  for (std::size_t i = 0; i < plain.size(); ++i)
    worst = std::max(worst, std::abs(shifted.samples[i] - g * plain.samples[i]) / (g * peak));
  EXPECT_LT(worst, 0.01);
  const auto a = argmax(plain.samples), b = argmax(shifted.samples);
  EXPECT_LE(a > b ? a - b : b - a, 1u);
}

TEST_F(ShiftFixture, ClockPhaseCostsUnderHundredthDb) {
  const auto x = saw_frame();
  auto zero = fe.shift;
  zero.delta_phi_rad = 0.0;
  const auto a = cyclic_shift(x, fe.shift, fe.env);
  const auto b = cyclic_shift(x, zero, fe.env);
  const double diff = 10 * std::log10(mean_power(a) / mean_power(b));
  EXPECT_NEAR(diff, 20 * std::log10(std::cos(fe.shift.delta_phi_rad)), 5e-4);
  EXPECT_LT(std::abs(diff), 0.01);
}

TEST_F(ShiftFixture, RemovesDcOffset) {
  const auto x = saw_frame();
  const auto plain = envelope_detect(x, fe.env);
  NoiseModel m;
  m.awgn_density = 0;
  m.dc_offset = std::sqrt(mean_power(plain));  // DC power equal to the signal power
  DetectorNoise dn{m, 1};
  const auto clean = cyclic_shift(x, fe.shift, fe.env);
  const auto dirty = cyclic_shift(x, fe.shift, fe.env, &dn);
  double dc = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) dc += dirty.samples[i] - clean.samples[i];
  dc /= static_cast<double>(clean.size());
  EXPECT_LT(10 * std::log10(dc * dc / mean_power(clean)), -40.0);
  // the plain detector keeps it
  const auto plain_dirty = envelope_detect(x, fe.env, &dn);
  double dc_plain = 0;
  for (std::size_t i = 0; i < plain.size(); ++i) dc_plain += plain_dirty.samples[i] - plain.samples[i];
  dc_plain /= static_cast<double>(plain.size());
  EXPECT_GT(10 * std::log10(dc_plain * dc_plain / mean_power(plain)), -1.0);
}

TEST_F(ShiftFixture, OverlappingBandsRejected) {
  auto bad = fe.shift;
  bad.delta_f_hz = bad.lpf_cutoff_hz + bad.if_bw_hz / 2;
  EXPECT_THROW(cyclic_shift(saw_frame(), bad, fe.env), ConfigError);
}

TEST(ShiftConfig, Validation) {
  auto s = ShiftConfig::defaults(500e3, 25e3);
  EXPECT_NO_THROW(s.validate(500e3));
  EXPECT_GE(std::cos(s.delta_phi_rad), 0.999);
  s.delta_f_hz = 400e3;
  EXPECT_THROW(s.validate(500e3), ConfigError);
  s = ShiftConfig::defaults(500e3, 25e3);
  s.delta_phi_rad = 0.5;
  EXPECT_THROW(s.validate(500e3), ConfigError);
}

TEST(DetectorNoise, FlickerBelowCorner) {
  NoiseModel m;
  m.flicker_gain = 1.0;
  m.flicker_corner_hz = 50e3;
  const double rate = 1e6;
  auto x = detector_noise(1 << 16, rate, m, 5);
  const auto p = fft::periodogram(std::span<const double>(x));
  const double df = rate / x.size();
  double below = 0, above = 0;
  for (std::size_t k = 1; k < p.size(); ++k) (k * df < m.flicker_corner_hz ? below : above) += p[k];
  EXPECT_GT(below, 3 * above);
  double ms = 0;
  for (double v : x) ms += v * v;
  EXPECT_NEAR(ms / x.size(), 1.0, 0.35);
}

TEST(DetectorNoise, DcAndDeterminism) {
  NoiseModel m;
  m.dc_offset = 0.25;
  auto a = detector_noise(100, 1e6, m, 1);
  for (double v : a) EXPECT_DOUBLE_EQ(v, 0.25);
  m.detector_density = 1e-3;
  EXPECT_EQ(detector_noise(100, 1e6, m, 9), detector_noise(100, 1e6, m, 9));
}

TEST(MeasureSnr, Cases) {
  RealStream s;
  s.rate = 1e6;
  const std::size_t n = 1 << 14;
  const double df = s.rate / n;
  for (std::size_t i = 0; i < n; ++i) s.samples.push_back(std::cos(kTwoPi * 1000 * df * i / s.rate));
  EXPECT_DOUBLE_EQ(measure_snr(s, {900 * df, 1100 * df}, {3000 * df, 4000 * df}), kSnrCeilingDb);

  for (std::size_t i = 0; i < n; ++i) s.samples[i] += std::cos(kTwoPi * 3500 * df * i / s.rate);
  EXPECT_NEAR(measure_snr(s, {999.5 * df, 1000.5 * df}, {3499.5 * df, 3500.5 * df}), 0.0, 0.2);

  EXPECT_THROW(measure_snr(s, {10e3, 10e3}, {20e3, 30e3}), std::domain_error);
  EXPECT_THROW(measure_snr(s, {10e3, 25e3}, {20e3, 30e3}), std::domain_error);
  EXPECT_THROW(measure_snr(s, {10e3, 20e3}, {400e3, 600e3}), std::domain_error);
}
