#include "rmdm/synthetic.hpp"

#include "rmdm/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace rmdm {

namespace {

Matrix spd_sqrt_checked(const Matrix& sigma) {
  try {
    return matrix_fn(SpdMatrix(sigma), MatrixFunction::Sqrt).values();
  } catch (const NumericError&) {
    throw ContractError("synthetic: class covariance is not SPD");
  }
}

// Unit-variance stationary AR(1) rows.
Matrix ar1_noise(int rows, int cols, double a, Rng& rng) {
  Matrix w = standard_normal(rows, cols, rng);
  const double innov = std::sqrt(1.0 - a * a);
  for (int r = 0; r < rows; ++r) {
    for (int t = 1; t < cols; ++t) w(r, t) = a * w(r, t - 1) + innov * w(r, t);
  }
  return w;
}

}  // namespace

Matrix standard_normal(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = normal(rng);
  }
  return m;
}

MiSpec default_mi_spec(int n_classes, int n_channels) {
  if (n_classes < 1 || n_classes > n_channels + 1) {
    throw ContractError("default_mi_spec: need 1 <= classes <= channels + 1");
  }
  MiSpec spec;
  for (int z = 1; z <= n_classes; ++z) {
    Matrix s = Matrix::Identity(n_channels, n_channels);
    if (z >= 2) s(z - 2, z - 2) = 4.0;
    spec.class_covs.push_back(s);
    spec.class_ids.push_back(z);
  }
  return spec;
}

std::vector<Epoch> generate_mi(const MiSpec& spec) {
  if (spec.class_covs.empty()) throw ContractError("generate_mi: no classes");
  if (!spec.class_ids.empty() && spec.class_ids.size() != spec.class_covs.size()) {
    throw ContractError("generate_mi: one class id per covariance required");
  }
  if (spec.n_samples < 2 || spec.trials_per_class < 0 || !(spec.fs > 0.0)) {
    throw ContractError("generate_mi: invalid sample count, trial count or rate");
  }
  const auto n = spec.class_covs.front().rows();
  std::vector<Matrix> roots;
  for (const auto& s : spec.class_covs) {
    if (s.rows() != n || s.cols() != n) throw ContractError("generate_mi: class covariances differ in shape");
    roots.push_back(spd_sqrt_checked(s));
  }
  Rng rng(spec.seed);
  std::vector<Epoch> out;
  for (std::size_t z = 0; z < roots.size(); ++z) {
    const int id = spec.class_ids.empty() ? static_cast<int>(z) + 1 : spec.class_ids[z];
    for (int k = 0; k < spec.trials_per_class; ++k) {
      Epoch e;
      e.data = roots[z] * standard_normal(static_cast<int>(n), spec.n_samples, rng);
      e.fs = spec.fs;
      e.label = id;
      out.push_back(std::move(e));
    }
  }
  return out;
}

P300Subject make_p300_subject(const P300Spec& spec) {
  if (spec.n_channels < 1 || spec.n_samples < 2 || !(spec.fs > 0.0)) {
    throw ContractError("p300 subject: invalid shape or sampling rate");
  }
  if (!(spec.ar_coeff >= 0.0 && spec.ar_coeff < 1.0)) throw ContractError("p300 subject: AR coefficient must lie in [0, 1)");
  Rng rng(spec.subject_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = spec.n_channels;
  const int t = spec.n_samples;

  const double n2_latency = 0.20 + 0.04 * unif(rng);
  const double p3_latency = 0.30 + 0.10 * unif(rng);
  Vector topo_n2(n);
  Vector topo_p3(n);
  for (int c = 0; c < n; ++c) {
    topo_n2(c) = 0.2 + 0.8 * unif(rng);
    topo_p3(c) = 0.2 + 0.8 * unif(rng);
  }
  Matrix erp(n, t);
  for (int s = 0; s < t; ++s) {
    const double sec = s / spec.fs;
    const double n2 = -0.6 * std::exp(-std::pow(sec - n2_latency, 2) / (2.0 * 0.03 * 0.03));
    const double p3 = std::exp(-std::pow(sec - p3_latency, 2) / (2.0 * 0.07 * 0.07));
    erp.col(s) = topo_n2 * n2 + topo_p3 * p3;
  }
  erp.colwise() -= erp.rowwise().mean();
  erp /= std::sqrt(erp.squaredNorm() / static_cast<double>(erp.size()));

  Matrix mixing = Matrix::Identity(n, n) + 0.5 * standard_normal(n, n, rng) / std::sqrt(static_cast<double>(n));
  mixing.rowwise().normalize();
  return P300Subject{erp, mixing, spec.ar_coeff, spec.fs};
}

Epoch draw_p300_epoch(const P300Subject& subject, double snr, bool target, Rng& rng) {
  const int n = static_cast<int>(subject.erp.rows());
  const int t = static_cast<int>(subject.erp.cols());
  Epoch e;
  e.data = subject.noise_mixing * ar1_noise(n, t, subject.ar_coeff, rng);
  if (target) e.data += snr * subject.erp;
  e.data.colwise() -= e.data.rowwise().mean();
  e.fs = subject.fs;
  e.label = target ? kP300Target : kP300NonTarget;
  return e;
}

P300Data generate_p300(const P300Spec& spec) {
  if (!(spec.snr >= 0.0) || !std::isfinite(spec.snr)) throw ContractError("generate_p300: SNR must be finite and >= 0");
  if (spec.n_target < 0 || spec.n_nontarget < 0) throw ContractError("generate_p300: negative trial count");
  const P300Subject subject = make_p300_subject(spec);
  Rng rng(spec.seed);
  P300Data out{{}, subject.erp};
  for (int k = 0; k < spec.n_target; ++k) out.epochs.push_back(draw_p300_epoch(subject, spec.snr, true, rng));
  for (int k = 0; k < spec.n_nontarget; ++k) out.epochs.push_back(draw_p300_epoch(subject, spec.snr, false, rng));
  return out;
}

std::vector<double> ssvep_channel_gains(int n_channels) {
  if (n_channels == 6) return {0.4, 0.9, 1.0, 0.9, 0.7, 0.8};
  std::vector<double> g(static_cast<std::size_t>(n_channels));
  for (int c = 0; c < n_channels; ++c) g[static_cast<std::size_t>(c)] = 0.4 + 0.6 * std::sin(std::numbers::pi * (c + 1) / (n_channels + 1));
  return g;
}

std::vector<std::string> ssvep_channel_names(int n_channels) {
  if (n_channels == 6) return {"CPz", "O1", "Oz", "O2", "POz", "Iz"};
  std::vector<std::string> names;
  for (int c = 0; c < n_channels; ++c) names.push_back("Ch" + std::to_string(c + 1));
  return names;
}

std::vector<Epoch> generate_ssvep(const SsvepSpec& spec) {
  if (spec.n_channels < 1 || !(spec.fs > 0.0) || !(spec.duration_s > 0.0) || spec.trials_per_class < 0) {
    throw ContractError("generate_ssvep: invalid shape, rate, duration or trial count");
  }
  if (!(spec.noise_sd >= 0.0) || !(spec.amplitude >= 0.0)) throw ContractError("generate_ssvep: negative amplitude or noise");
  for (double f : spec.freqs) {
    if (!(f > 0.0 && 2.0 * f < spec.fs / 2.0)) {
      throw ContractError("generate_ssvep: frequency " + std::to_string(f) + " Hz (and its harmonic) must lie below Nyquist");
    }
  }
  const int n = spec.n_channels;
  const int t = static_cast<int>(std::lround(spec.duration_s * spec.fs));
  if (t < 2) throw ContractError("generate_ssvep: segment shorter than 2 samples");
  const auto gains = ssvep_channel_gains(n);
  const auto names = ssvep_channel_names(n);

  Rng rng(spec.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::lognormal_distribution<double> jitter(0.0, 0.3);
  // Fixed spatial colouring of the background for this recording.
  Matrix mixing = Matrix::Identity(n, n) + 0.3 * standard_normal(n, n, rng) / std::sqrt(static_cast<double>(n));
  mixing.rowwise().normalize();

  std::vector<Epoch> out;
  for (int cls = 0; cls <= static_cast<int>(spec.freqs.size()); ++cls) {
    for (int k = 0; k < spec.trials_per_class; ++k) {
      Epoch e;
      e.data = spec.noise_sd * (mixing * standard_normal(n, t, rng));
      if (cls > 0) {
        const double f = spec.freqs[static_cast<std::size_t>(cls - 1)];
        const double amp = spec.amplitude * jitter(rng);
        const double ph1 = phase(rng);
        const double ph2 = phase(rng);
        for (int s = 0; s < t; ++s) {
          const double sec = s / spec.fs;
          const double v = amp * (std::sin(2.0 * std::numbers::pi * f * sec + ph1) +
                                  0.5 * std::sin(4.0 * std::numbers::pi * f * sec + ph2));
          for (int c = 0; c < n; ++c) e.data(c, s) += gains[static_cast<std::size_t>(c)] * v;
        }
      }
      e.fs = spec.fs;
      e.label = cls;
      e.channels = names;
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace rmdm
