#include "rmdm/dsp.hpp"
#include "rmdm/errors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace rmdm;
using namespace rmdm::testing;

namespace {

constexpr double kPi = std::numbers::pi;

// Squared magnitude of the analog Butterworth band-pass evaluated at the
// prewarped frequency; the bilinear transform maps it exactly onto the
// digital response.
double butter_gain2(double f, double lo, double hi, double fs, int order) {
  auto warp = [fs](double x) { return 2.0 * fs * std::tan(kPi * x / fs); };
  const double w = warp(f);
  const double wl = warp(lo);
  const double wh = warp(hi);
  const double ratio = (w * w - wl * wh) / (w * (wh - wl));
  return 1.0 / (1.0 + std::pow(ratio * ratio, order));
}

Epoch sine_epoch(double f, double fs, int t, int channels = 1, double amp = 1.0) {
  Epoch e;
  e.fs = fs;
  e.data.resize(channels, t);
  for (int c = 0; c < channels; ++c)
    for (int s = 0; s < t; ++s) e.data(c, s) = amp * std::sin(2.0 * kPi * f * s / fs + 0.3 * c);
  return e;
}

// Amplitude of the f-Hz component over the middle half (edges excluded).
double tone_amplitude(const Matrix& row, double f, double fs) {
  const Eigen::Index t = row.cols();
  double c = 0.0;
  double s = 0.0;
  const Eigen::Index a = t / 4;
  const Eigen::Index b = 3 * t / 4;
  for (Eigen::Index k = a; k < b; ++k) {
    c += row(0, k) * std::cos(2.0 * kPi * f * k / fs);
    s += row(0, k) * std::sin(2.0 * kPi * f * k / fs);
  }
  return 2.0 * std::hypot(c, s) / static_cast<double>(b - a);
}

double rms(const Matrix& m) { return std::sqrt(m.squaredNorm() / static_cast<double>(m.size())); }

Epoch noise_epoch(int channels, int t, double fs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Epoch e;
  e.fs = fs;
  e.data = gaussian(channels, t, rng);
  return e;
}

}  // namespace

TEST(ButterworthDesign, MagnitudeMatchesAnalogPrototype) {
  struct Case {
    double lo, hi, fs;
    int order;
  };
  for (const Case& c : {Case{8, 30, 256, 4}, Case{1, 16, 512, 4}, Case{14, 16, 256, 5}, Case{11, 13, 512, 5},
                        Case{0.5, 40, 250, 2}, Case{20, 60, 1000, 1}}) {
    const auto sos = design_butter_bandpass(c.lo, c.hi, c.fs, c.order);
    EXPECT_EQ(static_cast<int>(sos.size()), c.order);
    for (double f = 0.25; f < c.fs / 2.0; f += 0.37) {
      const double got = std::norm(frequency_response(sos, f, c.fs));
      EXPECT_NEAR(got, butter_gain2(f, c.lo, c.hi, c.fs, c.order), 1e-9) << "f=" << f;
    }
  }
}

TEST(ButterworthDesign, BandEdgesAreHalfPower) {
  const auto sos = design_butter_bandpass(8, 30, 256, 4);
  EXPECT_NEAR(std::norm(frequency_response(sos, 8.0, 256)), 0.5, 1e-9);
  EXPECT_NEAR(std::norm(frequency_response(sos, 30.0, 256)), 0.5, 1e-9);
}

TEST(ButterworthDesign, RejectsBandsOutsideNyquist) {
  EXPECT_THROW(design_butter_bandpass(0.0, 30, 256, 4), ContractError);
  EXPECT_THROW(design_butter_bandpass(30, 8, 256, 4), ContractError);
  EXPECT_THROW(design_butter_bandpass(8, 128, 256, 4), ContractError);
  EXPECT_THROW(design_butter_bandpass(8, 30, 256, 0), ContractError);
  EXPECT_THROW(bandpass(sine_epoch(10, 50, 128), kMotorImageryBand), ContractError);
}

TEST(Bandpass, PassbandToneKeepsAmplitude) {
  const Epoch out = bandpass(sine_epoch(15.0, 256.0, 1024), kMotorImageryBand);
  EXPECT_NEAR(tone_amplitude(out.data, 15.0, 256.0), 1.0, 0.05);
}

TEST(Bandpass, StopbandToneIsAttenuated) {
  const Epoch out = bandpass(sine_epoch(2.0, 256.0, 1024), kMotorImageryBand);
  EXPECT_LT(tone_amplitude(out.data, 2.0, 256.0), 0.1);
  EXPECT_LT(rms(out.data.middleCols(256, 512)), 0.1 / std::sqrt(2.0));
}

TEST(Bandpass, ZeroInZeroOut) {
  Epoch e;
  e.fs = 256.0;
  e.data = Matrix::Zero(3, 300);
  EXPECT_EQ(bandpass(e, kMotorImageryBand).data, e.data);
  EXPECT_EQ(bandpass(e, BandSpec{8, 30, 4, FilterPhase::Causal}).data, e.data);
}

TEST(Bandpass, OutputRowsAreDemeaned) {
  const Epoch out = bandpass(noise_epoch(4, 500, 256.0, 1), kMotorImageryBand);
  for (int c = 0; c < 4; ++c) {
    EXPECT_LT(std::abs(out.data.row(c).sum()), 1e-6 * 500 * rms(out.data.row(c)));
  }
}

TEST(Bandpass, IsLinear) {
  const Epoch x = noise_epoch(3, 400, 256.0, 2);
  const Epoch y = noise_epoch(3, 400, 256.0, 3);
  Epoch combo = x;
  combo.data = 2.5 * x.data - 0.75 * y.data;
  for (FilterPhase ph : {FilterPhase::ZeroPhase, FilterPhase::Causal}) {
    const BandSpec spec{8, 30, 4, ph};
    const Matrix expected = 2.5 * bandpass(x, spec).data - 0.75 * bandpass(y, spec).data;
    EXPECT_LT(rel_diff(bandpass(combo, spec).data, expected), 1e-9);
  }
}

TEST(Bandpass, ZeroPhaseHasNoLag) {
  // Band-limited input: noise passed once through a wider causal band.
  const Epoch wide = bandpass(noise_epoch(1, 2048, 256.0, 4), BandSpec{4, 40, 2, FilterPhase::Causal});
  auto peak_lag = [&](const Matrix& y) {
    int best = 0;
    double best_v = -1e300;
    for (int lag = -20; lag <= 20; ++lag) {
      double acc = 0.0;
      for (int s = 100; s < 1948; ++s) acc += wide.data(0, s) * y(0, s + lag);
      if (acc > best_v) {
        best_v = acc;
        best = lag;
      }
    }
    return best;
  };
  EXPECT_EQ(peak_lag(bandpass(wide, kMotorImageryBand).data), 0);
  EXPECT_GT(peak_lag(bandpass(wide, BandSpec{8, 30, 4, FilterPhase::Causal}).data), 0);
}

TEST(Bandpass, PreservesMetadata) {
  Epoch e = sine_epoch(10, 256, 300, 2);
  e.label = 3;
  e.channels = {"C3", "C4"};
  const Epoch out = bandpass(e, kMotorImageryBand);
  EXPECT_EQ(out.label, e.label);
  EXPECT_EQ(out.channels, e.channels);
  EXPECT_EQ(out.fs, e.fs);
  EXPECT_EQ(out.data.cols(), e.data.cols());
}

TEST(Sosfiltfilt, ShortSequences) {
  const auto sos = design_butter_bandpass(8, 30, 256, 4);
  EXPECT_EQ(sosfiltfilt(sos, {1.0}).size(), 1u);
  EXPECT_EQ(sosfiltfilt(sos, {1.0, 2.0, 3.0}).size(), 3u);
}

TEST(Decimate, FiveTwelveToOneTwentyEight) {
  Epoch e = noise_epoch(2, 512, 512.0, 5);
  e.channels = {"Fz", "Cz"};
  const Epoch out = decimate(e, 128.0);
  EXPECT_EQ(out.fs, 128.0);
  ASSERT_EQ(out.n_samples(), 128);
  for (int t = 0; t < 128; ++t) EXPECT_EQ(out.data.col(t), e.data.col(4 * t));
  EXPECT_EQ(out.channels, e.channels);
}

TEST(Decimate, UnitRatioIsIdentity) {
  const Epoch e = noise_epoch(2, 100, 128.0, 6);
  EXPECT_EQ(decimate(e, 128.0).data, e.data);
}

TEST(Decimate, ConstantStaysConstant) {
  Epoch e;
  e.fs = 512.0;
  e.data = Matrix::Constant(1, 64, 3.25);
  EXPECT_EQ(decimate(e, 64.0).data, Matrix::Constant(1, 8, 3.25));
}

TEST(Decimate, RejectsNonIntegerRatio) {
  EXPECT_THROW(decimate(noise_epoch(1, 100, 500.0, 7), 128.0), ContractError);
  EXPECT_THROW(decimate(noise_epoch(1, 100, 128.0, 7), 256.0), ContractError);
}

TEST(FilterBank, OneOutputPerFrequency) {
  const auto bank = ssvep_filter_bank(noise_epoch(6, 1024, 512.0, 8), {12.0, 15.0, 20.0});
  ASSERT_EQ(bank.size(), 3u);
  for (const auto& b : bank) EXPECT_EQ(b.data.rows(), 6);
  EXPECT_TRUE(ssvep_filter_bank(noise_epoch(6, 1024, 512.0, 8), {}).empty());
}

TEST(FilterBank, ToneDominatesItsOwnBand) {
  const auto bank = ssvep_filter_bank(sine_epoch(15.0, 512.0, 2048), {12.0, 15.0, 20.0});
  const double on = bank[1].data.middleCols(512, 1024).squaredNorm();
  EXPECT_GT(10.0 * std::log10(on / bank[0].data.middleCols(512, 1024).squaredNorm()), 20.0);
  EXPECT_GT(10.0 * std::log10(on / bank[2].data.middleCols(512, 1024).squaredNorm()), 20.0);
}

TEST(Preprocess, BandThenDecimate) {
  const Epoch e = noise_epoch(2, 512, 512.0, 9);
  const Preprocess p{kErpBand, 128.0};
  EXPECT_EQ(preprocess(e, p).data, decimate(bandpass(e, kErpBand), 128.0).data);
  EXPECT_EQ(preprocess(e, Preprocess{}).data, e.data);
}

TEST(EpochValidation, Shapes) {
  Epoch e;
  e.fs = 128.0;
  e.data = Matrix::Zero(2, 1);
  EXPECT_THROW(validate(e), ContractError);
  e.data = Matrix::Zero(2, 4);
  e.channels = {"a"};
  EXPECT_THROW(validate(e), ContractError);
  e.channels = {"a", "b"};
  e.fs = 0.0;
  EXPECT_THROW(validate(e), ContractError);
}
