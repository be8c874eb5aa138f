#pragma once

#include "rmdm/spd.hpp"

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace rmdm {

/// One trial: N channels × T samples, in microvolts.
struct Epoch {
  Matrix data;
  double fs = 0.0;
  std::optional<int> label;
  std::vector<std::string> channels;

  int n_channels() const noexcept { return static_cast<int>(data.rows()); }
  int n_samples() const noexcept { return static_cast<int>(data.cols()); }
};

/// Throws ContractError unless N ≥ 1, T ≥ 2, fs > 0 and the channel list
/// (when present) has N names.
void validate(const Epoch& e);

/// Subtract each channel's mean.
Epoch demean(Epoch e);

enum class FilterPhase { ZeroPhase, Causal };

struct BandSpec {
  double low_hz = 0.0;
  double high_hz = 0.0;
  int order = 4;
  FilterPhase phase = FilterPhase::ZeroPhase;
};

inline constexpr BandSpec kMotorImageryBand{8.0, 30.0, 4, FilterPhase::ZeroPhase};
inline constexpr BandSpec kErpBand{1.0, 16.0, 4, FilterPhase::ZeroPhase};
inline constexpr int kSsvepOrder = 5;
inline constexpr double kSsvepWidthHz = 2.0;

/// Direct-form II transposed second-order section, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2;
  double a1, a2;
};

/// Digital Butterworth band-pass of the given prototype order (the
/// resulting filter has order 2·order) as a cascade of `order` sections,
/// designed by the band-pass transform of the analog prototype followed
/// by the bilinear transform with frequency prewarping.
std::vector<Biquad> design_butter_bandpass(double low_hz, double high_hz, double fs, int order);

/// Complex frequency response of a section cascade at f_hz.
std::complex<double> frequency_response(const std::vector<Biquad>& sos, double f_hz, double fs);

/// Single-pass causal filtering of a sequence, zero initial state.
std::vector<double> sosfilt(const std::vector<Biquad>& sos, std::vector<double> x);

/// Forward-backward filtering with odd reflection padding and steady-state
/// initial conditions. Zero group delay; squared magnitude response.
std::vector<double> sosfiltfilt(const std::vector<Biquad>& sos, const std::vector<double>& x);

/// Butterworth band-pass per channel, then demean.
Epoch bandpass(const Epoch& e, const BandSpec& spec);

/// Keep every (fs / target_fs)-th sample. The ratio must be an integer.
Epoch decimate(const Epoch& e, double target_fs);

/// One band-passed copy per frequency, band [f − width/2, f + width/2].
std::vector<Epoch> ssvep_filter_bank(const Epoch& e, const std::vector<double>& freqs,
                                     double width_hz = kSsvepWidthHz, int order = kSsvepOrder,
                                     FilterPhase phase = FilterPhase::ZeroPhase);

/// Optional band-pass followed by optional decimation, applied per epoch.
struct Preprocess {
  std::optional<BandSpec> band;
  std::optional<double> decimate_to;
};

Epoch preprocess(const Epoch& e, const Preprocess& p);

}  // namespace rmdm
