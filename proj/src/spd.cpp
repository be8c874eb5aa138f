#include "rmdm/spd.hpp"

#include "rmdm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

namespace rmdm {

namespace {

void require_same_dim(const SpdMatrix& a, const SpdMatrix& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw ContractError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                        " vs " + std::to_string(b.dim()) + ")");
  }
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// C1^(-1/2) C2 C1^(-1/2), symmetrized.
SymmetricMatrix whiten(const SpdMatrix& c1, const Matrix& c2) {
  const Matrix& isq = c1.inv_sqrt();
  return SymmetricMatrix(isq * c2 * isq);
}

// Lower condition number first; exact ties by lexicographic entry order.
bool whitens_first(const SpdMatrix& a, const SpdMatrix& b) {
  const double ca = a.condition();
  const double cb = b.condition();
  if (ca != cb) return ca < cb;
  const Matrix& va = a.values();
  const Matrix& vb = b.values();
  return !std::lexicographical_compare(vb.data(), vb.data() + vb.size(), va.data(), va.data() + va.size());
}

std::vector<double> resolve_weights(std::span<const double> weights, std::size_t k) {
  if (weights.empty()) return std::vector<double>(k, 1.0 / static_cast<double>(k));
  if (weights.size() != k) throw ContractError("weights: size does not match the set size");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ContractError("weights: must be finite and nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ContractError("weights: must sum to 1");
  return {weights.begin(), weights.end()};
}

// Σ_k w_k ln(M^(-1/2) C_k M^(-1/2)) together with the inverse square root used.
Matrix log_map_sum(const Matrix& inv_sqrt_m, std::span<const SpdMatrix> set,
                   const std::vector<double>& w) {
  const int n = static_cast<int>(inv_sqrt_m.rows());
  Matrix sum = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (w[k] == 0.0) continue;
    const SymmetricMatrix s(inv_sqrt_m * set[k].values() * inv_sqrt_m);
    const Evd e = evd(s);
    if (e.eigenvalues.minCoeff() <= 0.0) throw NotPositiveDefinite("log-map of a non-SPD matrix");
    sum += w[k] * e.apply([](double x) { return std::log(x); });
  }
  return symmetrize(sum);
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw ContractError("SymmetricMatrix: expected a nonempty square matrix");
  }
  if (!m.allFinite()) throw ContractError("SymmetricMatrix: non-finite entries");
  values_ = symmetrize(m);
}

SymmetricMatrix SymmetricMatrix::identity(int dim) {
  return SymmetricMatrix(Matrix::Identity(dim, dim));
}

SymmetricMatrix SymmetricMatrix::diagonal(const Vector& d) {
  return SymmetricMatrix(Matrix(d.asDiagonal()));
}

Evd evd(const SymmetricMatrix& m) {
  const int n = m.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.values(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw EigenFailure(n);
  // The solver sorts ascending; reverse into descending order.
  Evd out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Vector eigenvalues(const SymmetricMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.values(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw EigenFailure(m.dim());
  return solver.eigenvalues().reverse();
}

bool passes_spd_check(const Vector& ev) {
  const double lmax = ev.maxCoeff();
  const double lmin = ev.minCoeff();
  return lmax > 0.0 && lmin > static_cast<double>(ev.size()) * lmax * 1e-12;
}

SpdMatrix::SpdMatrix(SymmetricMatrix m)
    : SpdMatrix(m, rmdm::eigenvalues(m)) {}

SpdMatrix::SpdMatrix(SymmetricMatrix m, Vector known_eigenvalues)
    : base_(std::move(m)), eigenvalues_(std::move(known_eigenvalues)), cache_(std::make_shared<Cache>()) {
  if (eigenvalues_.size() != base_.dim()) throw ContractError("SpdMatrix: eigenvalue count does not match the dimension");
  if (!passes_spd_check(eigenvalues_)) {
    throw NotPositiveDefinite("matrix of dimension " + std::to_string(base_.dim()) +
                              " is not positive definite (lambda_min = " +
                              std::to_string(eigenvalues_.minCoeff()) + ")");
  }
}

const Evd& SpdMatrix::eig() const {
  std::call_once(cache_->evd_once, [this] { cache_->evd = evd(base_); });
  return cache_->evd;
}

const Matrix& SpdMatrix::inv_sqrt() const {
  std::call_once(cache_->inv_sqrt_once,
                 [this] { cache_->inv_sqrt = eig().apply([](double x) { return 1.0 / std::sqrt(x); }); });
  return cache_->inv_sqrt;
}

const Matrix& SpdMatrix::cholesky_l() const {
  std::call_once(cache_->chol_once, [this] {
    Eigen::LLT<Matrix> llt(base_.values());
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("Cholesky factorization failed");
    cache_->chol = llt.matrixL();
  });
  return cache_->chol;
}

SymmetricMatrix matrix_fn(const SpdMatrix& c, MatrixFunction f) {
  const Evd& e = c.eig();
  switch (f) {
    case MatrixFunction::Inverse:
      return SymmetricMatrix(e.apply([](double x) { return 1.0 / x; }));
    case MatrixFunction::Sqrt:
      return SymmetricMatrix(e.apply([](double x) { return std::sqrt(x); }));
    case MatrixFunction::InvSqrt:
      return SymmetricMatrix(e.apply([](double x) { return 1.0 / std::sqrt(x); }));
    case MatrixFunction::Log:
      return SymmetricMatrix(e.apply([](double x) { return std::log(x); }));
    case MatrixFunction::Exp:
      return SymmetricMatrix(e.apply([](double x) { return std::exp(x); }));
  }
  throw ContractError("matrix_fn: unknown function");
}

SpdMatrix expm(const SymmetricMatrix& s) {
  return SpdMatrix(SymmetricMatrix(evd(s).apply([](double x) { return std::exp(x); })));
}

SymmetricMatrix matrix_power(const SpdMatrix& c, double p) {
  return SymmetricMatrix(c.eig().apply([p](double x) { return std::pow(x, p); }));
}

double riemann_distance(const SpdMatrix& c1, const SpdMatrix& c2) {
  require_same_dim(c1, c2, "riemann_distance");
  const bool first = whitens_first(c1, c2);
  const SpdMatrix& w = first ? c1 : c2;
  const SpdMatrix& o = first ? c2 : c1;
  const auto l = w.cholesky_l().triangularView<Eigen::Lower>();
  const Matrix half = l.solve(o.values());
  const Vector ev = eigenvalues(SymmetricMatrix(l.solve(half.transpose())));
  if (ev.minCoeff() <= 0.0) throw NotPositiveDefinite("riemann_distance: non-positive generalized eigenvalue");
  double acc = 0.0;
  for (double x : ev) {
    const double lx = std::log(x);
    acc += lx * lx;
  }
  return std::sqrt(acc);
}

SpdMatrix geodesic(const SpdMatrix& c1, const SpdMatrix& c2, double t) {
  require_same_dim(c1, c2, "geodesic");
  if (!(t >= 0.0 && t <= 1.0)) throw ContractError("geodesic: t must lie in [0, 1]");
  if (t == 0.0) return c1;
  if (t == 1.0) return c2;
  const Matrix sq = c1.eig().apply([](double x) { return std::sqrt(x); });
  const Evd inner = evd(whiten(c1, c2.values()));
  const Matrix powered = inner.apply([t](double x) { return std::pow(x, t); });
  return SpdMatrix(SymmetricMatrix(sq * powered * sq));
}

SpdMatrix arithmetic_mean(std::span<const SpdMatrix> set) {
  if (set.empty()) throw ContractError("arithmetic_mean: empty set");
  Matrix sum = Matrix::Zero(set[0].dim(), set[0].dim());
  for (const auto& c : set) {
    require_same_dim(set[0], c, "arithmetic_mean");
    sum += c.values();
  }
  return SpdMatrix(SymmetricMatrix(sum / static_cast<double>(set.size())));
}

double karcher_residual(const SpdMatrix& mean, std::span<const SpdMatrix> set,
                        std::span<const double> weights) {
  if (set.empty()) throw ContractError("karcher_residual: empty set");
  const auto w = resolve_weights(weights, set.size());
  return log_map_sum(mean.inv_sqrt(), set, w).norm();
}

SpdMatrix geometric_mean(std::span<const SpdMatrix> set, std::span<const double> weights,
                         const MeanConfig& cfg) {
  if (set.empty()) throw ContractError("geometric_mean: empty set");
  for (const auto& c : set) require_same_dim(set[0], c, "geometric_mean");
  const auto w = resolve_weights(weights, set.size());
  const int n = set[0].dim();
  const double tol = cfg.tol.value_or(1e-8 * n);
  if (set.size() == 1) return set[0];

  // Weighted arithmetic initializer.
  Matrix init = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < set.size(); ++k) init += w[k] * set[k].values();
  SpdMatrix m{SymmetricMatrix(init)};

  auto tangent_at = [&](const SpdMatrix& p) {
    return log_map_sum(p.inv_sqrt(), set, w);
  };

  Matrix tangent = tangent_at(m);
  double residual = tangent.norm();
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    if (residual < tol) return m;
    const Matrix sq = m.eig().apply([](double x) { return std::sqrt(x); });
    const Evd tangent_eig = evd(SymmetricMatrix(tangent));
    auto try_step = [&](double step) {
      const Matrix e = tangent_eig.apply([step](double x) { return std::exp(step * x); });
      SpdMatrix candidate{SymmetricMatrix(sq * e * sq)};
      Matrix candidate_tangent = tangent_at(candidate);
      return std::tuple{std::move(candidate), std::move(candidate_tangent)};
    };
    // Halve while the residual would grow; after a poor but successful
    // step keep halving while that still lowers the residual.
    double step = 1.0;
    auto [best, best_tangent] = try_step(step);
    double best_residual = best_tangent.norm();
    for (int halving = 0; halving < 20 && best_residual > residual; ++halving) {
      step *= 0.5;
      std::tie(best, best_tangent) = try_step(step);
      best_residual = best_tangent.norm();
    }
    if (best_residual <= residual && best_residual > 0.5 * residual) {
      for (int halving = 0; halving < 20; ++halving) {
        step *= 0.5;
        auto [candidate, candidate_tangent] = try_step(step);
        const double candidate_residual = candidate_tangent.norm();
        if (candidate_residual >= best_residual) break;
        best = std::move(candidate);
        best_tangent = std::move(candidate_tangent);
        best_residual = candidate_residual;
      }
    }
    m = std::move(best);
    tangent = std::move(best_tangent);
    residual = best_residual;
  }
  if (residual < tol) return m;
  throw NonConvergence(residual, cfg.max_iter);
}

}  // namespace rmdm
