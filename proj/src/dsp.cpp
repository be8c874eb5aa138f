#include "rmdm/dsp.hpp"

#include "rmdm/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace rmdm {

namespace {

using cd = std::complex<double>;

void validate_band(double low, double high, double fs, int order) {
  if (order < 1) throw ContractError("bandpass: filter order must be >= 1");
  if (!(low > 0.0 && low < high && high < fs / 2.0)) {
    throw ContractError("bandpass: band [" + std::to_string(low) + ", " + std::to_string(high) +
                        "] Hz must satisfy 0 < low < high < fs/2 = " + std::to_string(fs / 2.0));
  }
}

std::vector<double> row_of(const Matrix& m, int r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index t = 0; t < m.cols(); ++t) out[static_cast<std::size_t>(t)] = m(r, t);
  return out;
}

// Steady-state section states for a constant unit input.
std::vector<std::array<double, 2>> steady_state(const std::vector<Biquad>& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double scale = 1.0;
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const Biquad& s = sos[i];
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = (s.b2 - s.a2 * gain) * scale;
    const double z1 = (s.b1 - s.a1 * gain) * scale + z2;
    zi[i] = {z1, z2};
    scale *= gain;
  }
  return zi;
}

void run_sections(const std::vector<Biquad>& sos, std::vector<double>& x,
                  std::vector<std::array<double, 2>> state) {
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const Biquad& s = sos[i];
    double z1 = state[i][0];
    double z2 = state[i][1];
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

Epoch filter_rows(const Epoch& e, const std::vector<Biquad>& sos, FilterPhase phase) {
  Epoch out = e;
  for (int r = 0; r < e.n_channels(); ++r) {
    std::vector<double> row = row_of(e.data, r);
    row = phase == FilterPhase::ZeroPhase ? sosfiltfilt(sos, row) : sosfilt(sos, std::move(row));
    for (int t = 0; t < e.n_samples(); ++t) out.data(r, t) = row[static_cast<std::size_t>(t)];
  }
  return demean(std::move(out));
}

}  // namespace

void validate(const Epoch& e) {
  if (e.n_channels() < 1 || e.n_samples() < 2) {
    throw ContractError("epoch: need at least 1 channel and 2 samples, got " +
                        std::to_string(e.n_channels()) + "x" + std::to_string(e.n_samples()));
  }
  if (!(e.fs > 0.0)) throw ContractError("epoch: sampling rate must be positive");
  if (!e.channels.empty() && static_cast<int>(e.channels.size()) != e.n_channels()) {
    throw ContractError("epoch: channel name count does not match the data");
  }
}

Epoch demean(Epoch e) {
  e.data.colwise() -= e.data.rowwise().mean();
  return e;
}

std::vector<Biquad> design_butter_bandpass(double low_hz, double high_hz, double fs, int order) {
  validate_band(low_hz, high_hz, fs, order);
  const double pi = std::numbers::pi;
  const double fs2 = 2.0 * fs;
  const double wl = fs2 * std::tan(pi * low_hz / fs);
  const double wh = fs2 * std::tan(pi * high_hz / fs);
  const double bw = wh - wl;
  const double w0 = std::sqrt(wl * wh);

  std::vector<cd> upper;  // one pole of each conjugate pair
  std::vector<double> real_poles;
  for (int k = 0; k < order; ++k) {
    const cd proto = std::polar(1.0, pi * (2.0 * k + order + 1) / (2.0 * order));
    const cd a = proto * (bw / 2.0);
    const cd d = std::sqrt(a * a - w0 * w0);
    for (const cd s : {a + d, a - d}) {
      const cd z = (fs2 + s) / (fs2 - s);
      if (std::abs(z.imag()) <= 1e-12 * std::abs(z)) {
        real_poles.push_back(z.real());
      } else if (z.imag() > 0.0) {
        upper.push_back(z);
      }
    }
  }
  std::sort(real_poles.begin(), real_poles.end());
  if (real_poles.size() % 2 != 0 || upper.size() + real_poles.size() / 2 != static_cast<std::size_t>(order)) {
    throw NumericError("design_butter_bandpass: unexpected pole configuration");
  }

  // Every section carries one zero at z = 1 and one at z = -1.
  std::vector<Biquad> sos;
  for (const cd& p : upper) sos.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  for (std::size_t i = 0; i < real_poles.size(); i += 2) {
    const double p1 = real_poles[i];
    const double p2 = real_poles[i + 1];
    sos.push_back({1.0, 0.0, -1.0, -(p1 + p2), p1 * p2});
  }

  // Butterworth band-pass gain is exactly 1 at the prewarped centre
  // frequency and the overall digital gain is positive, so normalizing
  // each section's magnitude there reproduces the exact gain.
  const double fc = fs / pi * std::atan(w0 / fs2);
  for (Biquad& s : sos) {
    const double g = std::abs(frequency_response({s}, fc, fs));
    s.b0 /= g;
    s.b1 /= g;
    s.b2 /= g;
  }
  return sos;
}

std::complex<double> frequency_response(const std::vector<Biquad>& sos, double f_hz, double fs) {
  const cd z1 = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs);
  const cd z2 = z1 * z1;
  cd h = 1.0;
  for (const Biquad& s : sos) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return h;
}

std::vector<double> sosfilt(const std::vector<Biquad>& sos, std::vector<double> x) {
  run_sections(sos, x, std::vector<std::array<double, 2>>(sos.size(), {0.0, 0.0}));
  return x;
}

std::vector<double> sosfiltfilt(const std::vector<Biquad>& sos, const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return x;
  const std::size_t padlen = std::min<std::size_t>(3 * (2 * sos.size() + 1), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = steady_state(sos);
  auto scaled = [&](double v) {
    auto s = zi;
    for (auto& st : s) {
      st[0] *= v;
      st[1] *= v;
    }
    return s;
  };

  run_sections(sos, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_sections(sos, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen),
          ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

Epoch bandpass(const Epoch& e, const BandSpec& spec) {
  validate(e);
  const auto sos = design_butter_bandpass(spec.low_hz, spec.high_hz, e.fs, spec.order);
  return filter_rows(e, sos, spec.phase);
}

Epoch decimate(const Epoch& e, double target_fs) {
  validate(e);
  if (!(target_fs > 0.0)) throw ContractError("decimate: target rate must be positive");
  const double ratio = e.fs / target_fs;
  const long step = std::lround(ratio);
  if (step < 1 || std::abs(ratio - static_cast<double>(step)) > 1e-9 * ratio) {
    throw ContractError("decimate: " + std::to_string(e.fs) + " Hz is not an integer multiple of " +
                        std::to_string(target_fs) + " Hz");
  }
  if (step == 1) return e;
  const int t_out = static_cast<int>((e.n_samples() + step - 1) / step);
  Epoch out = e;
  out.fs = target_fs;
  out.data.resize(e.n_channels(), t_out);
  for (int t = 0; t < t_out; ++t) out.data.col(t) = e.data.col(static_cast<Eigen::Index>(t * step));
  return out;
}

std::vector<Epoch> ssvep_filter_bank(const Epoch& e, const std::vector<double>& freqs,
                                     double width_hz, int order, FilterPhase phase) {
  validate(e);
  std::vector<Epoch> bank;
  bank.reserve(freqs.size());
  for (double f : freqs) {
    bank.push_back(bandpass(e, BandSpec{f - width_hz / 2.0, f + width_hz / 2.0, order, phase}));
  }
  return bank;
}

Epoch preprocess(const Epoch& e, const Preprocess& p) {
  Epoch out = p.band ? bandpass(e, *p.band) : e;
  if (p.decimate_to) out = decimate(out, *p.decimate_to);
  return out;
}

}  // namespace rmdm
