#pragma once

// Super-Gaussian potentials t(s) and their variational dual machinery.
//
// Every potential is handled through g(x) = log t(sqrt(x)) - b*sqrt(x), which is
// convex and decreasing on x >= 0, and the width dual
//   h(gamma) = max_{x >= 0} (-x/gamma - 2 g(x)),
// so that t(s) = max_gamma exp(b s - s^2/(2 gamma) - h(gamma)/2).
//
// The inner loop of the double-loop algorithm needs the partially minimized
// penalty
//   h*(s) = 1/2 min_gamma [(z1 + x)/gamma + z2 gamma - z3 log gamma + h_cup(gamma)],
// with x = s^2 (or |s|^2 for a group), together with its first and second
// derivatives in |s|.

#include <span>
#include <vector>

namespace slm {

enum class PotentialKind { Laplace, StudentT, Bernoulli };

const char* to_string(PotentialKind kind);

/// One potential t_i. Construct through the named factories so that b is consistent.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::Laplace;
  double tau = 1.0;  ///< scale
  double nu = 0.0;   ///< Student's t degrees of freedom
  int y = 1;         ///< Bernoulli label (+1 / -1)
  double b = 0.0;    ///< linear coefficient; y*tau/2 for Bernoulli, 0 otherwise

  /// t(s) = exp(-tau |s|)
  static PotentialSpec laplace(double tau);
  /// t(s) = (1 + (tau/nu) s^2)^(-(nu+1)/2)
  static PotentialSpec student_t(double nu, double tau);
  /// Student's t with the same variance as Laplace(tau_laplace); needs nu > 2.
  static PotentialSpec student_t_matching_laplace(double nu, double tau_laplace);
  /// t(s) = 1 / (1 + exp(-y tau s))
  static PotentialSpec bernoulli(int label, double tau);

  /// Throws DomainError when the parameters are invalid.
  void validate() const;
  bool log_concave() const { return kind != PotentialKind::StudentT; }
  /// Student's t scale alpha = nu / tau.
  double alpha() const { return nu / tau; }
  /// Largest width for which the dual maximizer x_*(gamma) is zero; 0 for Laplace.
  double gamma0() const;
};

/// A value with its first and second derivative.
struct Derivs {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Per-potential warm starts for the scalar searches. Owned by the caller's solver state.
struct PotentialCache {
  double gamma = 0.0;  ///< last inner minimizer gamma_* (0: none yet)
  double x = -1.0;     ///< last dual maximizer x_*(gamma) (negative: none yet)
};

/// g(x) and its derivatives. For Laplace at x = 0 the derivatives are reported as
/// -inf / +inf sentinels (g itself is finite).
Derivs g_value_derivs(const PotentialSpec& pot, double x);

/// h(gamma) and its derivatives. Bernoulli is computed implicitly by a scalar search.
Derivs h_value_derivs(const PotentialSpec& pot, double gamma, PotentialCache* cache = nullptr);

/// Fenchel bound coefficients of one potential. Valid configurations are
/// (z1 > 0, z3 = 0) for type-A refits and (z1 = 0, z2 > 0, z3 >= 1) for type-B refits;
/// z3 equals the group size in the latter case (1 for scalar potentials).
struct BoundCoefficients {
  double z1 = 0.0;
  double z2 = 0.0;
  double z3 = 0.0;

  static BoundCoefficients type_a(double z1, double z2 = 0.0) { return {z1, z2, 0.0}; }
  static BoundCoefficients type_b(double z2, double z3 = 1.0) { return {0.0, z2, z3}; }

  /// Throws DomainError for negative entries or mixed configurations.
  void validate() const;
};

/// h*(s) and the quantities driving one IRLS step.
struct PenaltyEval {
  double hstar = 0.0;
  double theta = 0.0;        ///< d h*/ds - b (scalar), d h*/d|s| for groups
  double rho = 0.0;          ///< d^2 h*/d|s|^2
  double theta_tilde = 0.0;  ///< (d h*/d|s|) / |s|, computed directly
  double kappa = 0.0;        ///< sqrt(theta_tilde - rho) / |s|, computed directly
  double gamma_star = 0.0;   ///< inner minimizer over gamma
};

/// Scalar penalty. For Student's t, z2 must already contain the slope of h_cap and
/// z3 is ignored (it lives in h_cap).
PenaltyEval h_star(const PotentialSpec& pot, double s, const BoundCoefficients& bc,
                   PotentialCache* cache = nullptr);

/// Group penalty on |s|; a group of size one is the scalar case.
PenaltyEval h_star(const PotentialSpec& pot, std::span<const double> s,
                   const BoundCoefficients& bc, PotentialCache* cache = nullptr);

/// Student's t split h = h_cap + h_cup + z3 log gamma with h_cap concave nondecreasing
/// and h_cup convex and twice continuously differentiable.
struct StudentTSplit {
  double h_cap = 0.0;
  double h_cap_d1 = 0.0;
  double h_cup = 0.0;
  double h_cup_d1 = 0.0;
  double h_cup_d2 = 0.0;
};

StudentTSplit h_decompose_student_t(const PotentialSpec& pot, double gamma, double z3 = 0.0);

/// min_gamma (x/gamma + h(gamma)) + 2 g(x), minimized over the grid and refined locally.
/// Zero up to numerical error by Fenchel duality.
double fenchel_gap(const PotentialSpec& pot, double x, std::span<const double> gamma_grid);

/// count points log-spaced in [lo, hi].
std::vector<double> log_grid(double lo, double hi, int count);

}  // namespace slm
