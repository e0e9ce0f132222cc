#include "slm/varinf.hpp"

#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "slm/errors.hpp"

namespace slm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double group_z3(Bounding bounding, Index group_size) {
  return bounding == Bounding::TypeB ? static_cast<double>(group_size) : 0.0;
}

// z1/gamma + z2 gamma - z3 log gamma + h_cup(gamma) for one group.
double bound_gamma_terms(const PotentialSpec& pot, const BoundCoefficients& bc, double gamma) {
  double v = bc.z1 / gamma + bc.z2 * gamma;
  if (pot.kind == PotentialKind::StudentT) {
    v += h_decompose_student_t(pot, gamma, bc.z3).h_cup;
  } else {
    v += h_value_derivs(pot, gamma).value - bc.z3 * std::log(gamma);
  }
  return v;
}

}  // namespace

const char* to_string(Bounding b) { return b == Bounding::TypeA ? "A" : "B"; }

double h_total(const ModelSpec& model, const Vector& gamma) {
  double h = 0.0;
  PotentialCache cache;
  for (Index g = 0; g < model.groups(); ++g) h += h_value_derivs(model.potential(g), gamma[g], &cache).value;
  return h;
}

double r_value(const ModelSpec& model, const Vector& u, const Vector& gamma) {
  const Vector r = model.y - model.X.apply(u);
  const Vector s = model.B.apply(u);
  double v = r.squaredNorm() / model.sigma2 - 2.0 * model.b_vector().dot(s);
  for (Index g = 0; g < model.groups(); ++g) {
    v += s.segment(model.layout.begin(g), model.layout.size(g)).squaredNorm() / gamma[g];
  }
  return v;
}

PhiParts phi_parts(const ModelSpec& model, const Vector& gamma) {
  model.validate();
  const DensePosterior post(model, gamma);
  PhiParts p;
  p.log_det = post.log_det();
  p.h = h_total(model, gamma);
  p.u = post.mean();
  p.r_min = r_value(model, p.u, gamma);
  return p;
}

double phi_criterion(const ModelSpec& model, const Vector& gamma) { return phi_parts(model, gamma).total(); }

std::vector<BoundCoefficients> initial_bound(const ModelSpec& model, Bounding bounding, double init_z,
                                             double gamma_ref) {
  std::vector<BoundCoefficients> bc(static_cast<std::size_t>(model.groups()));
  for (Index g = 0; g < model.groups(); ++g) {
    const double z3 = group_z3(bounding, model.layout.size(g));
    BoundCoefficients b = bounding == Bounding::TypeA ? BoundCoefficients::type_a(init_z)
                                                      : BoundCoefficients::type_b(init_z, z3);
    const PotentialSpec& pot = model.potential(g);
    if (pot.kind == PotentialKind::StudentT) {
      b.z2 += h_decompose_student_t(pot, gamma_ref, z3).h_cap_d1;
    }
    bc[static_cast<std::size_t>(g)] = b;
  }
  return bc;
}

OuterRefit outer_update(const ModelSpec& model, const Vector& gamma, Bounding bounding,
                        const VarianceSource& source, const PrecisionAssembler* assembler) {
  if (gamma.size() != model.groups()) throw ShapeError("outer_update: gamma needs one entry per group");
  if (!(gamma.array() > 0.0).all()) throw DomainError("outer_update: gamma must be positive");
  OuterRefit out;
  if (source.is_exact()) {
    std::optional<PrecisionAssembler> local;
    if (!assembler) assembler = &local.emplace(model);
    const DensePosterior post(*assembler, gamma);
    out.zhat = post.group_variances();
    out.log_det = post.log_det();
    out.mean = post.mean();
  } else {
    const int k = std::min<Index>(source.k, model.n());
    const LanczosFactorization f =
        lanczos_variances(precision_operator(model, gamma), model.n(), model.B, k, true, source.seed);
    out.zhat = model.layout.sum_groups(f.zhat);
    if (assembler) {
      const DensePosterior post(*assembler, gamma);
      out.log_det = post.log_det();
      out.mean = post.mean();
    }
  }

  out.bc.resize(static_cast<std::size_t>(model.groups()));
  double offset = 0.0;
  for (Index g = 0; g < model.groups(); ++g) {
    const Index d = model.layout.size(g);
    const double gm = gamma[g];
    const double z3 = group_z3(bounding, d);
    BoundCoefficients b;
    if (bounding == Bounding::TypeA) {
      b = BoundCoefficients::type_a(out.zhat[g]);
      offset += b.z1 / gm;
    } else {
      double z2 = (static_cast<double>(d) - out.zhat[g] / gm) / gm;
      if (z2 < -1e-10) {
        throw ConsistencyError("type-B refit: negative z2 at group " + std::to_string(g) +
                               " (variance exceeds its width)");
      }
      z2 = std::max(z2, 0.0);
      b = BoundCoefficients::type_b(z2, z3);
      offset += z2 * gm - static_cast<double>(d) * std::log(gm);
    }
    const PotentialSpec& pot = model.potential(g);
    if (pot.kind == PotentialKind::StudentT) {
      const StudentTSplit split = h_decompose_student_t(pot, gm, z3);
      b.z2 += split.h_cap_d1;
      offset += split.h_cap_d1 * gm - split.h_cap;
    }
    out.bc[static_cast<std::size_t>(g)] = b;
  }
  out.offset = out.log_det ? offset - *out.log_det : kNaN;
  return out;
}

double bound_value(const ModelSpec& model, const OuterRefit& refit, const Vector& u, const Vector& gamma) {
  double v = r_value(model, u, gamma) - refit.offset;
  for (Index g = 0; g < model.groups(); ++g) {
    v += bound_gamma_terms(model.potential(g), refit.bc[static_cast<std::size_t>(g)], gamma[g]);
  }
  return v;
}

VariationalState run_double_loop(const ModelSpec& model, const DoubleLoopOptions& options) {
  model.validate();
  if (options.outer_max < 1) throw DomainError("run_double_loop: outer_max must be >= 1");
  const bool exact = options.variance.is_exact();
  const bool dense_ok = model.n() <= kDenseGuard;
  if (exact && !dense_ok) throw UnsupportedError("exact variances refused above the dense guard");

  std::optional<PrecisionAssembler> assembler;
  if (exact || (options.track_phi && dense_ok)) assembler.emplace(model);
  const PrecisionAssembler* asm_ptr = assembler ? &*assembler : nullptr;

  VariationalState state;
  state.bounding = options.bounding;
  state.caches.assign(static_cast<std::size_t>(model.groups()), PotentialCache{});
  Vector u = options.u_init ? *options.u_init : Vector::Zero(model.n());
  if (u.size() != model.n()) throw ShapeError("run_double_loop: u_init has wrong length");

  auto record = [&](int outer, const OuterRefit& refit, const Vector& gamma) {
    double phi = kNaN;
    if (refit.log_det && refit.mean) {
      phi = *refit.log_det + h_total(model, gamma) + r_value(model, *refit.mean, gamma);
    }
    state.phi_history.emplace_back(outer, phi);
    if (options.on_outer) options.on_outer(outer, gamma, phi);
    return phi;
  };

  if (options.gamma_init) {
    state.gamma = *options.gamma_init;
    const OuterRefit refit = outer_update(model, state.gamma, options.bounding, options.variance, asm_ptr);
    state.bc = refit.bc;
    state.offset = refit.offset;
    state.zhat = refit.zhat;
    if (exact) u = *refit.mean;
    record(0, refit, state.gamma);
  } else {
    state.bc = initial_bound(model, options.bounding, options.init_z, options.student_t_gamma_ref);
    state.offset = kNaN;
  }

  for (int t = 1; t <= options.outer_max; ++t) {
    const IrlsResult inner = irls_minimize(model, state.bc, u, options.inner, &state.caches);
    state.inner_steps.push_back(inner.report.iterations);
    state.gamma = inner.gamma;
    if (!(state.gamma.array() > 0.0).all()) {
      throw ConsistencyError("inner loop returned a non-positive width");
    }
    const OuterRefit refit = outer_update(model, state.gamma, options.bounding, options.variance, asm_ptr);
    state.bc = refit.bc;
    state.offset = refit.offset;
    state.zhat = refit.zhat;
    u = (exact && refit.mean) ? *refit.mean : inner.u;
    const double phi = record(t, refit, state.gamma);

    const std::size_t h = state.phi_history.size();
    if (h >= 2 && std::isfinite(phi)) {
      const double prev = state.phi_history[h - 2].second;
      if (exact && phi > prev + options.monotonicity_tol * (1.0 + std::abs(prev))) {
        state.u_star = u;
        throw MonotonicityError("phi increased under exact variances", t, prev, phi);
      }
      if (prev - phi < options.outer_tol * (1.0 + std::abs(phi))) {
        state.converged = true;
        break;
      }
    }
  }
  state.u_star = u;
  return state;
}

PosteriorSummary posterior_summary(const VariationalState& state, const ModelSpec& model,
                                   const VarianceSource& source) {
  PosteriorSummary out;
  out.mean = state.u_star;
  out.phi = kNaN;
  if (source.is_exact()) {
    const PhiParts parts = phi_parts(model, state.gamma);
    const DensePosterior post(model, state.gamma);
    out.variances = post.group_variances();
    out.phi = parts.total();
  } else {
    const int k = std::min<Index>(source.k, model.n());
    const LanczosFactorization f = lanczos_variances(precision_operator(model, state.gamma), model.n(),
                                                     model.B, k, true, source.seed);
    out.variances = model.layout.sum_groups(f.zhat);
    if (model.n() <= kDenseGuard) out.phi = phi_criterion(model, state.gamma);
  }
  return out;
}

ArdResult ard_estimate(const ModelSpec& model, const ArdOptions& options) {
  model.validate();
  const Index n = model.n();
  if (model.B.rows() != n) throw UnsupportedError("ARD needs a square analysis operator B");
  if (!model.layout.all_scalar()) throw UnsupportedError("ARD supports scalar potentials only");
  const Eigen::FullPivLU<Matrix> lu(model.B.dense());
  if (!lu.isInvertible()) throw UnsupportedError("ARD needs an invertible analysis operator B");
  const Matrix b_inv = lu.inverse();
  const Matrix xt = model.m() > 0 ? Matrix(model.X.dense() * b_inv) : Matrix::Zero(0, n);
  const Index m = model.m();

  ArdResult out;
  Vector gamma = Vector::Constant(n, options.gamma_init);
  Vector s = Vector::Zero(n);
  for (int it = 1; it <= options.max_outer; ++it) {
    out.iterations = it;
    std::vector<Index> active;
    for (Index i = 0; i < n; ++i) {
      if (gamma[i] > 0.0) active.push_back(i);
    }
    if (active.empty()) {
      out.converged = true;
      break;
    }
    const Index a = static_cast<Index>(active.size());
    Matrix xa(m, a);
    Vector sa(a);
    Vector ga(a);
    for (Index j = 0; j < a; ++j) {
      xa.col(j) = xt.col(active[static_cast<std::size_t>(j)]);
      sa[j] = s[active[static_cast<std::size_t>(j)]];
      ga[j] = gamma[active[static_cast<std::size_t>(j)]];
    }
    // z2_i = x_i^T Sigma_y^-1 x_i with Sigma_y = sigma^2 I + X_a Gamma_a X_a^T.
    Matrix sigma_y = model.sigma2 * Matrix::Identity(m, m);
    sigma_y.noalias() += xa * ga.asDiagonal() * xa.transpose();
    const Eigen::LLT<Matrix> llt(sigma_y);
    if (llt.info() != Eigen::Success) throw FactorizationError("ARD: Sigma_y not positive definite");
    const Matrix w = llt.matrixL().solve(xa);
    const Vector z2 = w.cwiseAbs2().colwise().sum().transpose();

    // Weighted l1 least squares by cyclic coordinate descent: exact zeros, no smoothing.
    Vector sa_new = sa;
    Vector r = model.y - xa * sa_new;
    const double inv_s2 = 1.0 / model.sigma2;
    const Vector curv = inv_s2 * xa.colwise().squaredNorm().transpose();
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
      double moved = 0.0;
      double size = 0.0;
      for (Index j = 0; j < a; ++j) {
        const double w = std::sqrt(std::max(0.0, z2[j]));
        double next = 0.0;
        if (curv[j] > 0.0) {
          const double c = inv_s2 * xa.col(j).dot(r) + curv[j] * sa_new[j];
          next = std::copysign(std::max(std::abs(c) - w, 0.0), c) / curv[j];
        }
        if (next != sa_new[j]) {
          r += (sa_new[j] - next) * xa.col(j);
          moved = std::max(moved, std::abs(next - sa_new[j]));
          sa_new[j] = next;
        }
        size = std::max(size, std::abs(next));
      }
      if (moved <= options.cd_tol * std::max(1.0, size)) break;
    }
    Vector gamma_new = gamma;
    for (Index j = 0; j < a; ++j) {
      const Index i = active[static_cast<std::size_t>(j)];
      const double w = std::sqrt(std::max(0.0, z2[j]));
      const double g = w > 0.0 ? std::abs(sa_new[j]) / w : 0.0;
      gamma_new[i] = g < options.prune_tol ? 0.0 : g;
      s[i] = gamma_new[i] == 0.0 ? 0.0 : sa_new[j];
    }
    // Relative change per surviving coefficient: small gammas still shrinking keep it going.
    double change = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (gamma_new[i] > 0.0) change = std::max(change, std::abs(gamma_new[i] - gamma[i]) / gamma_new[i]);
    }
    gamma = gamma_new;
    if (change <= options.tol) {
      out.converged = true;
      break;
    }
  }
  out.gamma = gamma;
  out.u = b_inv * s;
  for (Index i = 0; i < n; ++i) {
    if (gamma[i] > 0.0) out.support.push_back(i);
  }
  if (out.support.empty() && model.y.norm() > 0.0) {
    out.warning = "ARD pruned every coefficient although y is nonzero";
  }
  return out;
}

}  // namespace slm
