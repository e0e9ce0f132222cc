#pragma once

// Variational criterion
//   phi(gamma) = log|A| + h(gamma) + min_u R(u, gamma),
//   R = sigma^-2 |y - X u|^2 + sum_g |s_g|^2 / gamma_g - 2 b^T s,
// its double-loop minimization, and ARD sparse estimation.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slm/solvers.hpp"
#include "slm/variance.hpp"

namespace slm {

enum class Bounding { TypeA, TypeB };

const char* to_string(Bounding b);

struct VarianceSource {
  enum class Kind { Exact, Lanczos };
  Kind kind = Kind::Exact;
  int k = 0;
  std::uint64_t seed = 0;

  static VarianceSource exact() { return {}; }
  static VarianceSource lanczos(int k, std::uint64_t seed) { return {Kind::Lanczos, k, seed}; }
  bool is_exact() const { return kind == Kind::Exact; }
};

/// Parts of phi at gamma, from a dense factorization.
struct PhiParts {
  double log_det = 0.0;
  double h = 0.0;
  double r_min = 0.0;
  Vector u;  ///< argmin_u R, the posterior mean
  double total() const { return log_det + h + r_min; }
};

PhiParts phi_parts(const ModelSpec& model, const Vector& gamma);
/// Dense diagnostic; UnsupportedError above kDenseGuard.
double phi_criterion(const ModelSpec& model, const Vector& gamma);

/// sum_g h_g(gamma_g).
double h_total(const ModelSpec& model, const Vector& gamma);
/// R(u, gamma).
double r_value(const ModelSpec& model, const Vector& u, const Vector& gamma);

/// Result of refitting the upper bound phi_z to phi at gamma.
struct OuterRefit {
  std::vector<BoundCoefficients> bc;  ///< per group
  double offset = 0.0;                ///< g*(z), subtracted in phi_z
  Vector zhat;                        ///< per-group variances used for the refit
  std::optional<double> log_det;      ///< dense log|A| when computed
  std::optional<Vector> mean;         ///< dense posterior mean when computed
};

/// Bound coefficients and offsets tangent to phi at gamma. Type B uses z3 = group size.
/// Throws ConsistencyError when a type-B z2 falls below -1e-10.
OuterRefit outer_update(const ModelSpec& model, const Vector& gamma, Bounding bounding,
                        const VarianceSource& source,
                        const PrecisionAssembler* assembler = nullptr);

/// Joint bound phi_z(u, gamma) for a refit.
double bound_value(const ModelSpec& model, const OuterRefit& refit, const Vector& u,
                   const Vector& gamma);

/// Initial constant bound: z1 = init_z (type A) or z2 = init_z (type B), plus the
/// Student's t h_cap slope at gamma_ref.
std::vector<BoundCoefficients> initial_bound(const ModelSpec& model, Bounding bounding,
                                             double init_z, double gamma_ref);

struct DoubleLoopOptions {
  Bounding bounding = Bounding::TypeA;
  VarianceSource variance = VarianceSource::exact();
  int outer_max = 25;
  double outer_tol = 1e-6;         ///< stop when the phi decrease < outer_tol (1 + |phi|)
  double init_z = 1e-3;
  double student_t_gamma_ref = 1.0;
  std::optional<Vector> gamma_init;  ///< refit at this gamma instead of the constant bound
  std::optional<Vector> u_init;
  double monotonicity_tol = 1e-8;  ///< relative, enforced under exact variances
  bool track_phi = true;           ///< dense phi for the history when n permits
  IrlsOptions inner;
  /// Called after each refit with the outer index, gamma and phi (NaN when untracked).
  std::function<void(int, const Vector&, double)> on_outer;
};

struct VariationalState {
  Vector gamma;
  std::vector<BoundCoefficients> bc;
  double offset = 0.0;
  Vector u_star;
  Vector zhat;  ///< per-group variances of the last refit
  std::vector<std::pair<int, double>> phi_history;
  std::vector<int> inner_steps;
  Bounding bounding = Bounding::TypeA;
  std::vector<PotentialCache> caches;
  bool converged = false;
};

/// Alternates IRLS inner loops with outer refits. Throws MonotonicityError if phi rises
/// under exact variances.
VariationalState run_double_loop(const ModelSpec& model, const DoubleLoopOptions& options = {});

struct PosteriorSummary {
  Vector mean;
  Vector variances;  ///< per group
  double phi = 0.0;  ///< NaN when no dense factorization was possible
};

PosteriorSummary posterior_summary(const VariationalState& state, const ModelSpec& model,
                                   const VarianceSource& source);

struct ArdOptions {
  double prune_tol = 1e-8;  ///< gamma below this is set to 0 and frozen
  int max_outer = 100;
  double tol = 1e-6;        ///< max relative change of a surviving gamma
  double gamma_init = 1.0;
  int max_sweeps = 20000;   ///< coordinate descent sweeps per inner problem
  double cd_tol = 1e-13;    ///< largest coordinate move, relative to max(1, |s|_inf)
};

struct ArdResult {
  Vector u;
  Vector gamma;
  std::vector<Index> support;
  int iterations = 0;
  bool converged = false;
  std::string warning;  ///< non-empty for a degenerate result
};

/// ARD with h(gamma) = sum log gamma, type-B bounding and reweighted l1 inner problems
/// solved exactly by coordinate descent. B must be square and invertible; s = B u.
ArdResult ard_estimate(const ModelSpec& model, const ArdOptions& options = {});

}  // namespace slm
