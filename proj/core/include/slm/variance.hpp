#pragma once

// Marginal variances zhat = diag(B A^-1 B^T) of the Gaussian posterior approximation,
//   A = sigma^-2 X^T X + B^T (Gamma^-1 (x) I) B.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>

#include "slm/model.hpp"

namespace slm {

/// Largest n for which dense factorizations are attempted.
inline constexpr Index kDenseGuard = 4096;

/// Caches sigma^-2 X^T X and the sparse B so that A can be rebuilt cheaply for new gamma.
class PrecisionAssembler {
 public:
  explicit PrecisionAssembler(const ModelSpec& model);
  /// Dense A for per-group widths gamma.
  Matrix assemble(const Vector& gamma) const;
  const ModelSpec& model() const { return *model_; }

 private:
  const ModelSpec* model_;
  Matrix xtx_;
};

/// Matrix-free A for per-group widths gamma.
SpdMap precision_operator(const ModelSpec& model, const Vector& gamma);

/// Dense A with its Cholesky factor. Throws UnsupportedError above kDenseGuard and
/// FactorizationError when A is not positive definite.
class DensePosterior {
 public:
  DensePosterior(const ModelSpec& model, const Vector& gamma);
  DensePosterior(const PrecisionAssembler& assembler, const Vector& gamma);

  double log_det() const;
  const Matrix& precision() const { return a_; }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }
  Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }
  /// Posterior mean A^-1 (sigma^-2 X^T y + B^T b).
  Vector mean() const;
  /// b_i^T A^-1 b_i for every row of B.
  Vector variances() const;
  /// variances() summed over each group.
  Vector group_variances() const;
  /// A^-1, formed on first use.
  const Matrix& inverse() const;

 private:
  void factor();
  const ModelSpec* model_;
  Matrix a_;
  Eigen::LLT<Matrix> llt_;
  mutable std::optional<Matrix> inverse_;
};

/// Dense oracle: b_i^T A^-1 b_i for every row of B.
Vector exact_variances(const ModelSpec& model, const Vector& gamma);

/// Lanczos tridiagonalization of A with the running variance recurrence
///   zhat_k = zhat_{k-1} + v_k^2,  v_k = (B q_k - d_{k-1} v_{k-1}) / e_k,
/// where L_k (diagonal e, subdiagonal d) is the bidiagonal Cholesky factor of T_k.
struct LanczosFactorization {
  Matrix Q;                   ///< n x k orthonormal Krylov basis
  std::vector<double> alpha;  ///< diagonal of T_k (k entries)
  std::vector<double> beta;   ///< off-diagonal of T_k (k-1 entries used)
  std::vector<double> e;      ///< diagonal of L_k
  std::vector<double> d;      ///< subdiagonal of L_k (k-1 entries)
  Matrix V;                   ///< q x k, V_k = B Q_k L_k^-T
  Vector zhat;                ///< running estimate after k steps
  int k = 0;
  bool breakdown = false;     ///< stopped early on an invariant subspace
  bool reorthogonalized = true;

  /// Estimate after the first j steps (sum of the first j squared columns of V).
  Vector zhat_prefix(int j) const;
  /// Factorization truncated to its first j steps.
  LanczosFactorization prefix(int j) const;
  /// max |Q^T Q - I|; reported whether or not reorthogonalization was used.
  double orthogonality_loss() const;
  Matrix tridiagonal() const;
  Matrix cholesky_factor() const;
};

/// Runs up to k_max steps (k_max <= n) from a seeded Gaussian start vector.
/// Breakdown (beta below 1e-12 times the largest tridiagonal entry) ends early.
LanczosFactorization lanczos_variances(const SpdMap& a, Index n, const LinearOperator& b, int k_max,
                                       bool reorthogonalize, std::uint64_t seed);

/// Pairs (zhat_i, zhat_k_i / zhat_i); entries with zhat_i == 0 are skipped and counted.
struct VarianceProfile {
  std::vector<double> exact;
  std::vector<double> ratio;
  int excluded = 0;
};

VarianceProfile variance_error_profile(const Vector& zhat_k, const Vector& zhat_exact);

/// Mean ratio over the top and bottom fraction of entries sorted by exact variance.
struct DecileSummary {
  double top = 0.0;
  double bottom = 0.0;
};
DecileSummary profile_deciles(const VarianceProfile& profile, double fraction = 0.1);

}  // namespace slm
