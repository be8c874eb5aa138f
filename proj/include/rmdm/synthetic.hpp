#pragma once

// Seeded synthetic EEG generators. Every generator is a pure function of its
// spec (which carries the seed).

#include "rmdm/dsp.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace rmdm {

using Rng = std::mt19937_64;

/// Zero-mean Gaussian trials x(t) ~ N(0, Σ_z), one covariance per class.
struct MiSpec {
  std::vector<Matrix> class_covs;
  std::vector<int> class_ids;  // defaults to 1..Z
  int n_samples = 512;
  double fs = 256.0;
  int trials_per_class = 50;
  std::uint64_t seed = 0;
};

/// Σ_1 = I and, for z ≥ 2, Σ_z = I with variance 4 on channel z − 2.
MiSpec default_mi_spec(int n_classes, int n_channels);

std::vector<Epoch> generate_mi(const MiSpec& spec);

/// A simulated P300 user: spatio-temporal ERP template plus a coloured,
/// spatially mixed background.
struct P300Subject {
  Matrix erp;          // N × T, unit RMS
  Matrix noise_mixing;  // N × N, unit-norm rows
  double ar_coeff = 0.8;
  double fs = 128.0;
};

inline constexpr int kP300Target = 1;
inline constexpr int kP300NonTarget = 0;
/// Amplitude ratio between the template and the background, per sample RMS,
/// chosen so that single-trial MDM AUC sits near 0.9 with the defaults below.
inline constexpr double kDefaultP300Snr = 0.115;

struct P300Spec {
  int n_channels = 16;
  int n_samples = 128;
  double fs = 128.0;
  double snr = kDefaultP300Snr;
  double ar_coeff = 0.8;
  int n_target = 60;
  int n_nontarget = 300;
  std::uint64_t subject_seed = 1;
  std::uint64_t seed = 0;
};

P300Subject make_p300_subject(const P300Spec& spec);

/// target = snr · erp + noise, non-target = noise, noise = mixing · AR(1).
Epoch draw_p300_epoch(const P300Subject& subject, double snr, bool target, Rng& rng);

struct P300Data {
  std::vector<Epoch> epochs;  // targets first, then non-targets
  Matrix erp;
};

P300Data generate_p300(const P300Spec& spec);

/// Labels: 0 = rest, k = freqs[k − 1].
struct SsvepSpec {
  std::vector<double> freqs{12.0, 15.0, 20.0};
  int n_channels = 6;
  double fs = 256.0;
  double duration_s = 6.0;
  int trials_per_class = 8;
  double amplitude = 1.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;
};

/// Occipital-weighted gains for CPz, O1, Oz, O2, POz, Iz; other channel
/// counts get a smooth deterministic profile.
std::vector<double> ssvep_channel_gains(int n_channels);
std::vector<std::string> ssvep_channel_names(int n_channels);

std::vector<Epoch> generate_ssvep(const SsvepSpec& spec);

/// Matrix of independent standard normals.
Matrix standard_normal(int rows, int cols, Rng& rng);

}  // namespace rmdm
