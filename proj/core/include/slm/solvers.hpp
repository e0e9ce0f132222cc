#pragma once

// Linear conjugate gradients and the IRLS (Newton) minimizer of the inner criterion
//   phi_z(u) = sigma^-2 |y - X u|^2 + 2 sum_g h*_g(s_g) - 2 b^T s,   s = B u.

#include <vector>

#include "slm/model.hpp"

namespace slm {

struct SolveReport {
  int iterations = 0;          ///< LCG iterations, or Newton steps for IRLS
  double residual_norm = 0.0;  ///< LCG: relative residual; IRLS: final gradient norm
  bool converged = false;
  std::vector<int> line_search_steps;  ///< backtracking steps per Newton step
  int cg_iterations = 0;               ///< IRLS: LCG iterations summed over Newton steps
  bool cg_warning = false;             ///< IRLS: some LCG solve hit its iteration limit
  std::vector<double> objective_trace; ///< IRLS: phi_z after each accepted step (first = start)
};

struct LcgResult {
  Vector x;
  SolveReport report;
};

/// Preconditioned CG on an SPD map. `inv_diag` (optional) is the inverse of a diagonal
/// preconditioner. Throws NumericalError on non-finite values.
LcgResult lcg_solve(const SpdMap& op, const Vector& rhs, const Vector& x0, double tol, int maxit,
                    const Vector& inv_diag = Vector());

/// Inner Hessian in s applied to v: rho v on scalar groups, the subtraction-free rotated
/// form on pairs and theta_tilde v - kappa^2 s (s^T v) on larger groups.
Vector group_hessian_apply(const GroupLayout& layout, const Vector& theta_tilde, const Vector& rho,
                           const Vector& kappa, const Vector& s, const Vector& v);

/// Diagonal of the inner Hessian in s.
Vector group_hessian_diagonal(const GroupLayout& layout, const Vector& theta_tilde,
                              const Vector& rho, const Vector& kappa, const Vector& s);

enum class LinearSolver { Cg, Direct };

struct IrlsOptions {
  double rel_tol = 1e-9;    ///< stop when the relative decrease of phi_z falls below
  double grad_tol = 1e-7;   ///< or |grad| < grad_tol * (1 + |phi_z|)
  int max_newton = 200;
  double cg_tol = 1e-6;     ///< relative LCG residual, tightened 10x near convergence
  int cg_maxit = 5000;
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 40;
  LinearSolver solver = LinearSolver::Cg;
  Index preconditioner_guard = 4096;  ///< probe the diagonal only for n up to this
};

/// Penalty part of phi_z at s, with per-group curvature when requested.
struct PenaltyTerms {
  double value = 0.0;     ///< 2 sum h* - 2 b^T s
  Vector grad;            ///< half the gradient in s (includes -b)
  Vector theta_tilde;     ///< per group
  Vector rho;             ///< per group
  Vector kappa;           ///< per group
  Vector gamma_star;      ///< per group
};

/// Bound coefficients are given per group. Caches (optional) hold one slot per group.
PenaltyTerms evaluate_penalty(const ModelSpec& model, const std::vector<BoundCoefficients>& bc,
                              const Vector& s, std::vector<PotentialCache>* caches = nullptr);

double inner_objective(const ModelSpec& model, const std::vector<BoundCoefficients>& bc,
                       const Vector& u, std::vector<PotentialCache>* caches = nullptr);

/// Full gradient of phi_z in u.
Vector inner_gradient(const ModelSpec& model, const std::vector<BoundCoefficients>& bc,
                      const Vector& u, std::vector<PotentialCache>* caches = nullptr);

struct IrlsResult {
  Vector u;
  Vector gamma;          ///< per-group minimizer gamma_* at u
  double objective = 0;  ///< phi_z(u) without bound offsets
  SolveReport report;
};

/// Newton minimization of phi_z with Armijo backtracking. Throws StallError when the line
/// search cannot decrease phi_z above rounding level.
IrlsResult irls_minimize(const ModelSpec& model, const std::vector<BoundCoefficients>& bc,
                         const Vector& u0, const IrlsOptions& options = {},
                         std::vector<PotentialCache>* caches = nullptr);

/// Smoothed MAP estimate: IRLS with z1 = epsilon_smooth for every potential.
/// Student's t is rejected (non-convex).
Vector map_estimate(const ModelSpec& model, double epsilon_smooth, const Vector& u0,
                    const IrlsOptions& options = {});

}  // namespace slm
