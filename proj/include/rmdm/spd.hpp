#pragma once

// Geometry of the manifold of symmetric positive-definite matrices under the
// affine-invariant metric: eigendecomposition-based matrix functions,
// distance, geodesics and the Karcher (geometric) mean.

#include <Eigen/Dense>

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

namespace rmdm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. The input is symmetrized as (A + Aᵀ)/2 on
/// construction so that values(i, j) == values(j, i) holds bit-exactly.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const Matrix& m);

  static SymmetricMatrix identity(int dim);
  static SymmetricMatrix diagonal(const Vector& d);

  int dim() const noexcept { return static_cast<int>(values_.rows()); }
  const Matrix& values() const noexcept { return values_; }
  double operator()(int i, int j) const { return values_(i, j); }

 private:
  Matrix values_;
};

/// Eigendecomposition A = U diag(λ) Uᵀ with λ sorted in descending order.
struct Evd {
  Matrix vectors;
  Vector eigenvalues;

  /// U f(Λ) Uᵀ for an arbitrary scalar function of the eigenvalues.
  template <typename F>
  Matrix apply(F&& f) const {
    Vector mapped = eigenvalues.unaryExpr(f);
    return vectors * mapped.asDiagonal() * vectors.transpose();
  }
};

Evd evd(const SymmetricMatrix& m);

/// Eigenvalues only, descending.
Vector eigenvalues(const SymmetricMatrix& m);

/// Relative positive-definiteness test: λ_min > dim · λ_max · 1e-12.
bool passes_spd_check(const Vector& eigenvalues_desc);

/// A symmetric matrix whose eigenvalues pass the relative SPD check.
/// Eigenvalues are computed on construction; the full eigendecomposition
/// and the inverse square root are computed on first use and cached behind
/// std::call_once, so instances are immutable and safe to share across
/// threads. Copies share the cache.
class SpdMatrix {
 public:
  /// Throws NotPositiveDefinite when the check fails.
  explicit SpdMatrix(SymmetricMatrix m);
  explicit SpdMatrix(const Matrix& m) : SpdMatrix(SymmetricMatrix(m)) {}

  /// Skips the eigenvalue computation when the caller already knows the
  /// spectrum (descending). The check is still applied.
  SpdMatrix(SymmetricMatrix m, Vector known_eigenvalues);

  static SpdMatrix identity(int dim) { return SpdMatrix(SymmetricMatrix::identity(dim)); }

  int dim() const noexcept { return base_.dim(); }
  const SymmetricMatrix& symmetric() const noexcept { return base_; }
  const Matrix& values() const noexcept { return base_.values(); }
  /// Descending.
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  const Evd& eig() const;
  /// C^(-1/2).
  const Matrix& inv_sqrt() const;
  /// Lower Cholesky factor L with C = L Lᵀ.
  const Matrix& cholesky_l() const;
  double condition() const noexcept { return eigenvalues_(0) / eigenvalues_(eigenvalues_.size() - 1); }

 private:
  struct Cache {
    std::once_flag evd_once;
    Evd evd;
    std::once_flag inv_sqrt_once;
    Matrix inv_sqrt;
    std::once_flag chol_once;
    Matrix chol;
  };

  SymmetricMatrix base_;
  Vector eigenvalues_;
  std::shared_ptr<Cache> cache_;
};

enum class MatrixFunction { Inverse, Sqrt, InvSqrt, Log, Exp };

SymmetricMatrix matrix_fn(const SpdMatrix& c, MatrixFunction f);

/// Matrix exponential of a symmetric matrix; always SPD up to the check.
SpdMatrix expm(const SymmetricMatrix& s);

/// C^p for real p.
SymmetricMatrix matrix_power(const SpdMatrix& c, double p);

/// Affine-invariant distance ‖ln(C1⁻¹C2)‖_F, evaluated through the
/// eigenvalues of the congruent symmetric matrix L⁻¹ C L⁻ᵀ, where L is the
/// Cholesky factor of the better-conditioned argument and C the other one.
/// The choice of whitener depends only on the unordered pair, so the result
/// is bit-identical under swapping the arguments.
double riemann_distance(const SpdMatrix& c1, const SpdMatrix& c2);

/// Point at parameter t ∈ [0, 1] on the geodesic from c1 (t = 0) to c2 (t = 1).
SpdMatrix geodesic(const SpdMatrix& c1, const SpdMatrix& c2, double t);

struct MeanConfig {
  /// Stopping threshold on the Frobenius norm of the weighted log-map sum.
  /// When unset, 1e-8 · dim.
  std::optional<double> tol;
  int max_iter = 60;
};

/// Element-wise average (1/K) Σ C_k.
SpdMatrix arithmetic_mean(std::span<const SpdMatrix> set);

/// ‖Σ_k w_k ln(M^(-1/2) C_k M^(-1/2))‖_F. Empty weights means uniform.
double karcher_residual(const SpdMatrix& mean, std::span<const SpdMatrix> set,
                        std::span<const double> weights = {});

/// Weighted Karcher mean by the fixed-point iteration
///   M ← M^(1/2) exp(s Σ_k w_k ln(M^(-1/2) C_k M^(-1/2))) M^(1/2)
/// initialized at the arithmetic mean. The step s starts at 1 and is halved
/// within an iteration whenever the residual would grow. Throws
/// NonConvergence carrying the last residual after max_iter iterations.
SpdMatrix geometric_mean(std::span<const SpdMatrix> set, std::span<const double> weights = {},
                         const MeanConfig& cfg = {});

}  // namespace rmdm
