#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "saiyan/waveform.hpp"

using namespace saiyan;

namespace {

// Instantaneous frequency from the phase difference between samples i-1, i.
double phase_freq(const ComplexStream& s, std::size_t i) {
  return std::arg(s.samples[i] * std::conj(s.samples[i - 1])) * s.rate / kTwoPi;
}

}  // namespace

TEST(SymbolTiming, Sf7Bw500) {
  auto t = symbol_timing(SymbolParams::make(7, 500e3, 2));
  EXPECT_DOUBLE_EQ(t.period_s, 256e-6);
  EXPECT_DOUBLE_EQ(t.slope_hz_per_s, 1.953125e9);
  EXPECT_EQ(t.bins, 4u);
}

TEST(SymbolTiming, Sf12Bw125) {
  EXPECT_DOUBLE_EQ(SymbolParams::make(12, 125e3, 2).symbol_time(), 32.768e-3);
}

TEST(SymbolTiming, SlopeTimesPeriodIsBandwidth) {
  for (int sf = 7; sf <= 12; ++sf)
    for (double bw : {125e3, 250e3, 500e3}) {
      auto p = SymbolParams::make(sf, bw, 1);
      EXPECT_NEAR(p.slope() * p.symbol_time(), bw, 1e-6 * bw);
    }
}

TEST(SymbolTiming, NumericIntegralOfFrequencyReachesBw) {
  auto p = SymbolParams::make(7, 500e3, 2);
  const int steps = 10000;
  double f = 0.0;
  const double dt = p.symbol_time() / steps;
  for (int i = 0; i < steps; ++i) f += p.slope() * dt;
  EXPECT_NEAR(f, p.bw, 1e-6 * p.bw);
}

TEST(SymbolParams, RejectsInvalid) {
  EXPECT_THROW(SymbolParams::make(6, 500e3, 2), ConfigError);
  EXPECT_THROW(SymbolParams::make(13, 500e3, 2), ConfigError);
  EXPECT_THROW(SymbolParams::make(7, 300e3, 2), ConfigError);
  EXPECT_THROW(SymbolParams::make(7, 500e3, 0), ConfigError);
  EXPECT_THROW(SymbolParams::make(7, 500e3, 6), ConfigError);
}

TEST(GenChirp, ConstantEnvelope) {
  auto p = SymbolParams::make(8, 250e3, 3);
  for (std::uint32_t v = 0; v < p.bins(); ++v) {
    auto s = gen_chirp(p, v, 8 * p.bw, 0.7);
    double lo = 1e9, hi = -1e9;
    for (auto x : s.samples) {
      lo = std::min(lo, std::abs(x));
      hi = std::max(hi, std::abs(x));
    }
    EXPECT_LT(hi - lo, 1e-9 * 0.7);
    EXPECT_NEAR(hi, 0.7, 1e-12);
  }
}

TEST(GenChirp, FrequencyTrajectoryLaw) {
  auto p = SymbolParams::make(7, 500e3, 2);
  const double rate = 8 * p.bw;
  for (std::uint32_t v = 0; v < p.bins(); ++v) {
    auto s = gen_chirp(p, v, rate);
    const double f0 = p.initial_offset(v);
    const double t_wrap = (p.bw - f0) / p.slope();
    for (std::size_t i = 1; i < s.size(); ++i) {
      const double tm = (i - 0.5) / rate;
      if (std::abs(tm - t_wrap) < 1.0 / rate) continue;
      double expect = std::fmod(f0 + p.slope() * tm, p.bw);
      double got = phase_freq(s, i);
      if (got < 0) got += rate;
      if (got >= rate / 2 && expect < rate / 2) got -= rate;
      EXPECT_NEAR(got, expect, p.bw / 1000) << "v=" << v << " i=" << i;
    }
  }
}

TEST(GenChirp, Value0StartsAtZeroNoWrap) {
  auto p = SymbolParams::make(7, 500e3, 2);
  auto s = gen_chirp(p, 0, 8 * p.bw);
  EXPECT_NEAR(phase_freq(s, 1), 0.5 / s.rate * p.slope(), 1.0);
  for (std::size_t i = 2; i < s.size(); ++i) EXPECT_GT(phase_freq(s, i), phase_freq(s, i - 1));
}

TEST(GenChirp, WrapTimeValue3K2) {
  auto p = SymbolParams::make(7, 500e3, 2);
  const double rate = 16 * p.bw;
  auto s = gen_chirp(p, 3, rate);
  std::size_t wrap = 0;
  for (std::size_t i = 2; i < s.size(); ++i)
    if (phase_freq(s, i) < phase_freq(s, i - 1) - p.bw / 2) wrap = i;
  EXPECT_NEAR((wrap - 0.5) / rate, 64e-6, 1.0 / rate);
}

TEST(GenChirp, Errors) {
  auto p = SymbolParams::make(7, 500e3, 2);
  EXPECT_THROW(gen_chirp(p, 4, 8 * p.bw), std::domain_error);
  EXPECT_THROW(gen_chirp(p, 0, 1.5 * p.bw), ConfigError);
}

TEST(PeakTime, Values) {
  auto p = SymbolParams::make(7, 500e3, 2);
  EXPECT_DOUBLE_EQ(peak_time(p, 0), p.symbol_time());
  EXPECT_DOUBLE_EQ(peak_time(p, 2), p.symbol_time() / 2);
  EXPECT_NEAR(peak_time(p, 3), 64e-6, 1e-15);
  EXPECT_THROW(peak_time(p, 4), std::domain_error);
}

TEST(PeakTime, UniformSpacing) {
  for (int k = 1; k <= 5; ++k) {
    auto p = SymbolParams::make(10, 250e3, k);
    for (std::uint32_t v = 1; v < p.bins(); ++v)
      EXPECT_NEAR(peak_time(p, v - 1) - peak_time(p, v), p.symbol_time() / p.bins(), 1e-15);
  }
}

TEST(Differentiate, ToneEnvelopeScalesWithFrequency) {
  const double rate = 4e6;
  auto tone = [&](double f) {
    ComplexStream s;
    s.rate = rate;
    for (int i = 0; i < 4000; ++i) s.samples.push_back(std::polar(1.0, kTwoPi * f * i / rate));
    return s;
  };
  auto mean_env = [](const ComplexStream& s) {
    double acc = 0;
    for (auto x : s.samples) acc += std::abs(x);
    return acc / s.size();
  };
  const double e1 = mean_env(differentiate(tone(50e3)));
  const double e2 = mean_env(differentiate(tone(100e3)));
  EXPECT_NEAR(e2 / e1, 2.0, 0.04);
  // constant envelope for a tone
  auto d = differentiate(tone(50e3));
  for (auto x : d.samples) EXPECT_NEAR(std::abs(x), e1, 1e-6 * e1);
}

TEST(Differentiate, ChirpEnvelopeIncreasing) {
  auto p = SymbolParams::make(7, 500e3, 2);
  auto d = differentiate(gen_chirp(p, 0, 8 * p.bw));
  for (std::size_t i = 1; i < d.size(); ++i)
    EXPECT_GT(std::abs(d.samples[i]), std::abs(d.samples[i - 1]));
}

TEST(Differentiate, Linear) {
  RealStream x, y, z;
  x.rate = y.rate = z.rate = 10.0;
  for (int i = 0; i < 50; ++i) {
    x.samples.push_back(std::sin(0.3 * i));
    y.samples.push_back(i * i * 0.01);
    z.samples.push_back(2.0 * x.samples.back() - 3.0 * y.samples.back());
  }
  auto dx = differentiate(x), dy = differentiate(y), dz = differentiate(z);
  for (std::size_t i = 0; i < dz.size(); ++i)
    EXPECT_NEAR(dz.samples[i], 2.0 * dx.samples[i] - 3.0 * dy.samples[i], 1e-12);
}

TEST(Differentiate, ShortStream) {
  RealStream s;
  s.rate = 1.0;
  s.samples = {1.0};
  EXPECT_THROW(differentiate(s), std::domain_error);
}

TEST(BuildFrame, Durations) {
  auto p = SymbolParams::make(7, 500e3, 2);
  const double rate = 8 * p.bw;
  Frame empty{p, {}};
  EXPECT_NEAR(build_frame(empty, rate).duration(), 12.25 * p.symbol_time(), 1e-12);
  Frame f{p, std::vector<std::uint32_t>(32, 1)};
  EXPECT_NEAR(f.airtime(), 11.328e-3, 1e-12);
  EXPECT_NEAR(build_frame(f, rate).duration(), 11.328e-3, 1e-12);
}

TEST(BuildFrame, PhaseContinuousAndConstantEnvelope) {
  auto p = SymbolParams::make(7, 500e3, 2);
  Frame f{p, {3, 0, 2, 1}};
  auto s = build_frame(f, 8 * p.bw);
  for (std::size_t i = 1; i < s.size(); ++i) {
    EXPECT_NEAR(std::abs(s.samples[i]), 1.0, 1e-12);
    // |phase step| never exceeds the largest in-band step
    EXPECT_LE(std::abs(phase_freq(s, i)), p.bw * 1.01);
  }
}

TEST(BuildFrame, SyncIsIdleCarrier) {
  auto p = SymbolParams::make(7, 500e3, 2);
  Frame f{p, {1}};
  auto s = build_frame(f, 8 * p.bw);
  const auto a = static_cast<std::size_t>(10.2 * p.symbol_time() * s.rate);
  const auto b = static_cast<std::size_t>(12.2 * p.symbol_time() * s.rate);
  for (std::size_t i = a; i < b; ++i) EXPECT_NEAR(phase_freq(s, i), 0.0, 1e-6);
}
