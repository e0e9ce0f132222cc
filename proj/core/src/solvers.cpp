#include "slm/solvers.hpp"

#include <cmath>
#include <limits>
#include <span>

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>

#include "slm/errors.hpp"

namespace slm {

namespace {

bool finite(const Vector& v) { return v.allFinite(); }

void check_bc(const ModelSpec& model, const std::vector<BoundCoefficients>& bc) {
  if (static_cast<Index>(bc.size()) != model.groups()) {
    throw ShapeError("one set of bound coefficients per group required");
  }
}

// Pieces of the Newton system shared by all steps of one IRLS run.
struct NewtonSystem {
  const ModelSpec& model;
  const IrlsOptions& options;
  double inv_s2;
  Vector x_colsq;   // empty when the preconditioner is off
  Matrix xtx;       // direct solver only
  bool have_xtx = false;

  NewtonSystem(const ModelSpec& m, const IrlsOptions& o) : model(m), options(o), inv_s2(1.0 / m.sigma2) {
    if (o.solver == LinearSolver::Direct) {
      const Matrix& xd = m.X.dense();
      xtx = inv_s2 * (xd.transpose() * xd);
      have_xtx = true;
    } else if (m.n() <= o.preconditioner_guard && m.m() > 0) {
      x_colsq = m.X.sparse().cwiseAbs2().transpose() * Vector::Ones(m.m());
    } else if (m.n() <= o.preconditioner_guard) {
      x_colsq = Vector::Zero(m.n());
    }
  }

  Vector solve(const PenaltyTerms& pen, const Vector& s, const Vector& rhs, double tol,
               SolveReport& report) const {
    const GroupLayout& layout = model.layout;
    if (options.solver == LinearSolver::Direct) {
      std::vector<Eigen::Triplet<double>> trip;
      for (Index g = 0; g < layout.groups(); ++g) {
        const Index b = layout.begin(g);
        const Index d = layout.size(g);
        if (d == 1) {
          trip.emplace_back(b, b, pen.rho[g]);
          continue;
        }
        const double k2 = pen.kappa[g] * pen.kappa[g];
        for (Index i = 0; i < d; ++i) {
          for (Index j = 0; j < d; ++j) {
            double v = 0.0;
            if (d == 2) {
              const double mi = i == 0 ? -s[b + 1] : s[b];
              const double mj = j == 0 ? -s[b + 1] : s[b];
              v = (i == j ? pen.rho[g] : 0.0) + k2 * mi * mj;
            } else {
              v = (i == j ? pen.theta_tilde[g] : 0.0) - k2 * s[b + i] * s[b + j];
            }
            trip.emplace_back(b + i, b + j, v);
          }
        }
      }
      SparseMatrix hs(layout.rows(), layout.rows());
      hs.setFromTriplets(trip.begin(), trip.end());
      const SparseMatrix& bs = model.B.sparse();
      const SparseMatrix bhb = bs.transpose() * hs * bs;
      Matrix h = xtx;
      h += Matrix(bhb);
      report.cg_iterations += 1;
      Eigen::LLT<Matrix> llt(h);
      // Nearly singular in floating point (tiny curvature on a data null space): retry
      // with a growing diagonal floor; the line search keeps the step a descent step.
      const double top = h.diagonal().cwiseAbs().maxCoeff();
      for (double floor = 1e-14; llt.info() != Eigen::Success && floor <= 1e-6; floor *= 100.0) {
        Matrix hf = h;
        hf.diagonal().array() += floor * top;
        llt.compute(hf);
      }
      if (llt.info() != Eigen::Success) throw FactorizationError("IRLS: Newton system not positive definite");
      return llt.solve(rhs);
    }

    auto op = [&](const Vector& v) -> Vector {
      Vector out = inv_s2 * model.X.apply_adjoint(model.X.apply(v));
      const Vector bv = model.B.apply(v);
      out += model.B.apply_adjoint(
          group_hessian_apply(layout, pen.theta_tilde, pen.rho, pen.kappa, s, bv));
      return out;
    };
    Vector inv_diag;
    if (x_colsq.size() > 0) {
      const Vector hd = group_hessian_diagonal(layout, pen.theta_tilde, pen.rho, pen.kappa, s);
      const Vector diag = inv_s2 * x_colsq + model.B.sparse().cwiseAbs2().transpose() * hd;
      inv_diag = diag.unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 1.0; });
    }
    const LcgResult res = lcg_solve(op, rhs, Vector::Zero(rhs.size()), tol, options.cg_maxit, inv_diag);
    report.cg_iterations += res.report.iterations;
    if (!res.report.converged) report.cg_warning = true;
    return res.x;
  }
};

}  // namespace

LcgResult lcg_solve(const SpdMap& op, const Vector& rhs, const Vector& x0, double tol, int maxit,
                    const Vector& inv_diag) {
  if (!(tol > 0.0)) throw DomainError("lcg_solve: tol must be positive");
  if (x0.size() != rhs.size()) throw ShapeError("lcg_solve: x0 and rhs differ in length");
  if (inv_diag.size() != 0 && inv_diag.size() != rhs.size()) {
    throw ShapeError("lcg_solve: preconditioner length mismatch");
  }
  LcgResult out;
  out.x = x0;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    out.x.setZero();
    out.report.converged = true;
    return out;
  }
  auto precond = [&](const Vector& r) -> Vector {
    return inv_diag.size() ? Vector(inv_diag.cwiseProduct(r)) : r;
  };
  Vector r = rhs - op(out.x);
  double rel = r.norm() / bnorm;
  if (rel <= tol) {
    out.report.converged = true;
    out.report.residual_norm = rel;
    return out;
  }
  Vector z = precond(r);
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= maxit; ++it) {
    const Vector ap = op(p);
    const double pap = p.dot(ap);
    if (!std::isfinite(pap) || !finite(ap)) throw NumericalError("lcg_solve: non-finite product", it);
    out.report.iterations = it;
    if (pap <= 0.0) break;
    const double alpha = rz / pap;
    out.x += alpha * p;
    r -= alpha * ap;
    rel = r.norm() / bnorm;
    if (!std::isfinite(rel)) throw NumericalError("lcg_solve: non-finite residual", it);
    if (rel <= tol) {
      out.report.converged = true;
      break;
    }
    z = precond(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  out.report.residual_norm = rel;
  return out;
}

Vector group_hessian_apply(const GroupLayout& layout, const Vector& theta_tilde, const Vector& rho,
                           const Vector& kappa, const Vector& s, const Vector& v) {
  if (v.size() != layout.rows() || s.size() != layout.rows()) {
    throw ShapeError("group_hessian_apply: vector length mismatch");
  }
  Vector out(v.size());
  for (Index g = 0; g < layout.groups(); ++g) {
    const Index b = layout.begin(g);
    const Index d = layout.size(g);
    if (d == 1) {
      out[b] = rho[g] * v[b];
    } else if (d == 2) {
      // |s|^2 I - s s^T = (M s)(M s)^T with M the quarter rotation.
      const double m0 = -s[b + 1];
      const double m1 = s[b];
      const double w = kappa[g] * kappa[g] * (m0 * v[b] + m1 * v[b + 1]);
      out[b] = rho[g] * v[b] + w * m0;
      out[b + 1] = rho[g] * v[b + 1] + w * m1;
    } else {
      const auto sg = s.segment(b, d);
      const double w = kappa[g] * kappa[g] * sg.dot(v.segment(b, d));
      out.segment(b, d) = theta_tilde[g] * v.segment(b, d) - w * sg;
    }
  }
  return out;
}

Vector group_hessian_diagonal(const GroupLayout& layout, const Vector& theta_tilde,
                              const Vector& rho, const Vector& kappa, const Vector& s) {
  Vector out(layout.rows());
  for (Index g = 0; g < layout.groups(); ++g) {
    const Index b = layout.begin(g);
    const Index d = layout.size(g);
    const double k2 = kappa[g] * kappa[g];
    if (d == 1) {
      out[b] = rho[g];
    } else if (d == 2) {
      out[b] = rho[g] + k2 * s[b + 1] * s[b + 1];
      out[b + 1] = rho[g] + k2 * s[b] * s[b];
    } else {
      for (Index i = 0; i < d; ++i) out[b + i] = theta_tilde[g] - k2 * s[b + i] * s[b + i];
    }
  }
  return out;
}

PenaltyTerms evaluate_penalty(const ModelSpec& model, const std::vector<BoundCoefficients>& bc,
                              const Vector& s, std::vector<PotentialCache>* caches) {
  check_bc(model, bc);
  const GroupLayout& layout = model.layout;
  if (s.size() != layout.rows()) throw ShapeError("evaluate_penalty: s has wrong length");
  if (caches && static_cast<Index>(caches->size()) != layout.groups()) {
    caches->assign(static_cast<std::size_t>(layout.groups()), PotentialCache{});
  }
  const Index groups = layout.groups();
  PenaltyTerms out;
  out.grad.resize(s.size());
  out.theta_tilde.resize(groups);
  out.rho.resize(groups);
  out.kappa.resize(groups);
  out.gamma_star.resize(groups);
  double value = 0.0;
  for (Index g = 0; g < groups; ++g) {
    const Index b = layout.begin(g);
    const Index d = layout.size(g);
    const PotentialSpec& pot = model.potential(g);
    PotentialCache* cache = caches ? &(*caches)[static_cast<std::size_t>(g)] : nullptr;
    const std::span<const double> sg(s.data() + b, static_cast<std::size_t>(d));
    const PenaltyEval e = h_star(pot, sg, bc[static_cast<std::size_t>(g)], cache);
    if (d == 1) {
      value += 2.0 * e.hstar - 2.0 * pot.b * s[b];
      out.grad[b] = e.theta;
    } else {
      value += 2.0 * e.hstar;
      out.grad.segment(b, d) = e.theta_tilde * s.segment(b, d);
    }
    out.theta_tilde[g] = e.theta_tilde;
    out.rho[g] = e.rho;
    out.kappa[g] = e.kappa;
    out.gamma_star[g] = e.gamma_star;
  }
  out.value = value;
  return out;
}

double inner_objective(const ModelSpec& model, const std::vector<BoundCoefficients>& bc,
                       const Vector& u, std::vector<PotentialCache>* caches) {
  const Vector r = model.y - model.X.apply(u);
  return r.squaredNorm() / model.sigma2 + evaluate_penalty(model, bc, model.B.apply(u), caches).value;
}

Vector inner_gradient(const ModelSpec& model, const std::vector<BoundCoefficients>& bc,
                      const Vector& u, std::vector<PotentialCache>* caches) {
  const Vector r = model.y - model.X.apply(u);
  const PenaltyTerms pen = evaluate_penalty(model, bc, model.B.apply(u), caches);
  return 2.0 * (model.B.apply_adjoint(pen.grad) - model.X.apply_adjoint(r) / model.sigma2);
}

IrlsResult irls_minimize(const ModelSpec& model, const std::vector<BoundCoefficients>& bc,
                         const Vector& u0, const IrlsOptions& options,
                         std::vector<PotentialCache>* caches) {
  model.validate();
  check_bc(model, bc);
  if (u0.size() != model.n()) throw ShapeError("irls_minimize: u0 has wrong length");
  std::vector<PotentialCache> local;
  if (!caches) caches = &local;

  const double inv_s2 = 1.0 / model.sigma2;
  const NewtonSystem system(model, options);

  IrlsResult out;
  Vector u = u0;
  Vector r = model.y - model.X.apply(u);
  Vector s = model.B.apply(u);
  PenaltyTerms pen = evaluate_penalty(model, bc, s, caches);
  double f = inv_s2 * r.squaredNorm() + pen.value;
  out.report.objective_trace.push_back(f);
  bool near_end = false;

  for (int it = 0; it < options.max_newton; ++it) {
    const Vector grad = model.B.apply_adjoint(pen.grad) - inv_s2 * model.X.apply_adjoint(r);
    const double gnorm = 2.0 * grad.norm();
    out.report.residual_norm = gnorm;
    if (!std::isfinite(gnorm)) throw NumericalError("IRLS: non-finite gradient", it);
    if (gnorm < options.grad_tol * (1.0 + std::abs(f))) {
      out.report.converged = true;
      break;
    }
    const double tol = near_end ? 0.1 * options.cg_tol : options.cg_tol;
    Vector d = system.solve(pen, s, -grad, tol, out.report);
    double slope = grad.dot(d);  // half the directional derivative
    if (!(slope < 0.0)) {
      d = -grad;
      slope = -grad.squaredNorm();
    }
    const Vector xd = model.X.apply(d);
    const Vector bd = model.B.apply(d);

    double t = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    int steps = 0;
    for (; steps <= options.max_backtracks; ++steps) {
      const Vector s_t = s + t * bd;
      f_new = inv_s2 * (r - t * xd).squaredNorm() + evaluate_penalty(model, bc, s_t, caches).value;
      if (std::isfinite(f_new) && f_new <= f + options.armijo * t * 2.0 * slope) {
        accepted = true;
        break;
      }
      t *= options.shrink;
    }
    out.report.line_search_steps.push_back(steps);
    if (!accepted) {
      // No decrease representable above rounding: the iterate is already optimal.
      if (std::abs(f_new - f) <= 1e-12 * (1.0 + std::abs(f)) ||
          std::abs(slope) * t <= 1e-15 * (1.0 + std::abs(f))) {
        out.report.converged = true;
        break;
      }
      throw StallError("IRLS: line search failed after " + std::to_string(options.max_backtracks) +
                           " backtracking steps",
                       u);
    }
    u += t * d;
    r -= t * xd;
    s += t * bd;
    pen = evaluate_penalty(model, bc, s, caches);
    f_new = inv_s2 * r.squaredNorm() + pen.value;
    const double decrease = f - f_new;
    f = f_new;
    out.report.objective_trace.push_back(f);
    out.report.iterations = it + 1;
    const double rel = decrease / std::max(1.0, std::abs(f));
    if (rel < options.rel_tol) {
      out.report.converged = true;
      break;
    }
    near_end = rel < 1e-5;
  }
  out.u = std::move(u);
  out.gamma = pen.gamma_star;
  out.objective = f;
  return out;
}

Vector map_estimate(const ModelSpec& model, double epsilon_smooth, const Vector& u0,
                    const IrlsOptions& options) {
  if (!(epsilon_smooth > 0.0)) {
    throw DomainError("map_estimate: IRLS needs a positive smoothing constant");
  }
  for (const auto& p : model.potentials) {
    if (p.kind == PotentialKind::StudentT) {
      throw UnsupportedError("map_estimate: Student's t MAP is non-convex and not supported");
    }
  }
  const std::vector<BoundCoefficients> bc(static_cast<std::size_t>(model.groups()),
                                          BoundCoefficients::type_a(epsilon_smooth));
  return irls_minimize(model, bc, u0, options).u;
}

}  // namespace slm
