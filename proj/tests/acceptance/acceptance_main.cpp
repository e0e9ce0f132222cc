// Acceptance run: one PASS/FAIL line per criterion with the measured numbers.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "slm/app/synth.hpp"
#include "slm/design.hpp"
#include "slm/errors.hpp"

using namespace slm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector gaussian(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Matrix gaussian(Index r, Index c, std::mt19937_64& rng) {
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j) m.col(j) = gaussian(r, rng);
  return m;
}

// Desk-scale image model: phantom, low-pass columns, noise at 1e-3 of the signal power.
struct ImageCase {
  Vector u_true;
  double sigma2 = 0.0;
  ImagePrior prior;
  ModelSpec model;
};

// Laplace scales for images in [0, 1].
ImagePriorParams desk_prior(PotentialKind kind = PotentialKind::Laplace, double nu = 2.1) {
  return {.tau_a = 0.07 * 255.0, .tau_r = 0.04 * 255.0, .kind = kind, .nu = nu};
}

ImageCase image_case(Index side, Index columns, std::uint64_t seed, const ImagePriorParams& params = desk_prior()) {
  ImageCase c;
  c.u_true = app::make_phantom(side, seed);
  c.sigma2 = 1e-3 * c.u_true.squaredNorm() / static_cast<double>(c.u_true.size());
  c.prior = make_image_prior(side, params);
  const auto cols = baseline_design(BaselineKind::Lowpass, side, columns, {}, 0);
  const Vector y = simulate_measurements(c.u_true, side, cols, c.sigma2, seed);
  c.model = make_model(c.prior, make_partial_orthotransform_2d(side, side, cols), y, c.sigma2);
  return c;
}

Matrix dense_precision(const ModelSpec& m, const Vector& gamma) {
  const Matrix& x = m.X.dense();
  const Matrix& b = m.B.dense();
  const Vector w = m.layout.expand(gamma).cwiseInverse();
  return x.transpose() * x / m.sigma2 + b.transpose() * w.asDiagonal() * b;
}

double log_det(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw FactorizationError("acceptance: matrix not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Vector random_gamma(Index groups, std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> unif(-spread, spread);
  Vector g(groups);
  for (Index i = 0; i < groups; ++i) g[i] = std::exp(unif(rng));
  return g;
}

// ---------------------------------------------------------------------------

Outcome duality() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto grid = log_grid(1e-8, 1e8, 161);
  double worst[3] = {0.0, 0.0, 0.0};
  for (int kind = 0; kind < 3; ++kind) {
    for (int trial = 0; trial < 50; ++trial) {
      const double tau = std::exp(4.0 * unif(rng) - 2.0);
      PotentialSpec pot = kind == 0   ? PotentialSpec::laplace(tau)
                          : kind == 1 ? PotentialSpec::student_t(0.5 + 5.0 * unif(rng), tau)
                                      : PotentialSpec::bernoulli(unif(rng) < 0.5 ? -1 : 1, tau);
      for (double x : log_grid(1e-4, 1e4, 25)) worst[kind] = std::max(worst[kind], std::abs(fenchel_gap(pot, x, grid)));
      worst[kind] = std::max(worst[kind], std::abs(fenchel_gap(pot, 0.0, grid)));
    }
  }
  const double w = std::max({worst[0], worst[1], worst[2]});
  return {w <= 1e-6, fmt("max |gap| laplace %.2e student_t %.2e bernoulli %.2e (tol 1e-6)", worst[0], worst[1], worst[2])};
}

Outcome adjoints() {
  std::mt19937_64 rng(2);
  SparseMatrix sp(12, 9);
  for (int k = 0; k < 30; ++k) sp.coeffRef(static_cast<Index>(rng() % 12), static_cast<Index>(rng() % 9)) += 1.0;
  const LinearOperator dense = make_dense(gaussian(11, 7, rng));
  const std::vector<LinearOperator> ops = {
      dense,
      make_sparse(sp),
      make_identity(13),
      make_empty(5),
      make_finite_difference_2d(8, 12, Axis::Horizontal),
      make_finite_difference_2d(8, 12, Axis::Vertical),
      make_isotropic_tv_2d(12, 9),
      make_haar_1d(32, 3),
      make_haar_wavelet_2d(16, 2),
      make_dct_2d(16, 16),
      make_partial_orthotransform_2d(16, 16, {8, 7, 1, 14}),
      stack({dense, make_dense(gaussian(3, 7, rng))}, {2.0, -0.5}),
      compose(dense, make_dense(gaussian(7, 5, rng))),
      select_rows(make_dct_2d(8, 8), {3, 60, 17}),
      scale(make_haar_wavelet_2d(8, 1), 3.0),
      make_image_prior(16, {}).B,
      make_image_prior(16, {.isotropic_tv = true}).B,
  };
  double worst_gap = 0.0, worst_dense = 0.0;
  for (const LinearOperator& op : ops) {
    worst_gap = std::max(worst_gap, adjoint_gap(op, 20, 7));
    if (op.cols() > 512 || op.rows() == 0) continue;
    const Matrix& d = op.dense();
    for (int probe = 0; probe < 5; ++probe) {
      const Vector u = gaussian(op.cols(), rng);
      const Vector v = gaussian(op.rows(), rng);
      const double sf = (d * u - op.apply(u)).cwiseAbs().maxCoeff() / (1.0 + (d * u).cwiseAbs().maxCoeff());
      const double sa = (d.transpose() * v - op.apply_adjoint(v)).cwiseAbs().maxCoeff() /
                        (1.0 + (d.transpose() * v).cwiseAbs().maxCoeff());
      worst_dense = std::max({worst_dense, sf, sa});
    }
    worst_dense = std::max(worst_dense, (Matrix(op.sparse()) - d).cwiseAbs().maxCoeff());
  }
  return {worst_gap <= 1e-10 && worst_dense <= 1e-12,
          fmt("%zu operators, max adjoint gap %.2e (tol 1e-10), max dense mismatch %.2e (tol 1e-12)",
              ops.size(), worst_gap, worst_dense)};
}

Outcome identities() {
  double worst_grad = 0.0, worst_var = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ImageCase c = image_case(8, 2, seed);
    const ModelSpec& m = c.model;
    std::mt19937_64 rng(seed);
    const Vector gamma = random_gamma(m.groups(), rng, 2.0) * 0.05;

    // gradient of the inner criterion, both bounding types
    for (Bounding b : {Bounding::TypeA, Bounding::TypeB}) {
      const OuterRefit refit = outer_update(m, gamma, b, VarianceSource::exact());
      const Vector u = *refit.mean + 0.1 * gaussian(m.n(), rng);
      const Vector g = inner_gradient(m, refit.bc, u);
      Vector fd(m.n());
      for (Index i = 0; i < m.n(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(u[i]));
        Vector up = u, um = u;
        up[i] += h;
        um[i] -= h;
        fd[i] = (inner_objective(m, refit.bc, up) - inner_objective(m, refit.bc, um)) / (2.0 * h);
      }
      worst_grad = std::max(worst_grad, (g - fd).norm() / g.norm());
    }

    // variances as the gradient of log|A| in 1/gamma
    const Vector z = exact_variances(m, gamma);
    Vector fd(m.groups());
    for (Index i = 0; i < m.groups(); ++i) {
      const double p = 1.0 / gamma[i], h = 1e-4 * p;
      Vector gp = gamma, gm = gamma;
      gp[i] = 1.0 / (p + h);
      gm[i] = 1.0 / (p - h);
      fd[i] = (log_det(dense_precision(m, gp)) - log_det(dense_precision(m, gm))) / (2.0 * h);
    }
    worst_var = std::max(worst_var, (z - fd).norm() / z.norm());
  }
  return {worst_grad <= 1e-5 && worst_var <= 1e-5,
          fmt("10 seeds on 8x8: inner gradient rel. err %.2e, variance rel. err %.2e (tol 1e-5)", worst_grad,
              worst_var)};
}

Outcome convexity() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const ImageCase lap = image_case(8, 2, 3);
  double worst_convex = -1e300, worst_concave = -1e300;
  for (int t = 0; t < 100; ++t) {
    const Vector ga = random_gamma(lap.model.groups(), rng, 3.0) * 0.05;
    const Vector gb = random_gamma(lap.model.groups(), rng, 3.0) * 0.05;
    const double lam = unif(rng);
    const Vector gm = lam * ga + (1.0 - lam) * gb;
    const double phi_m = phi_criterion(lap.model, gm);
    const double phi_c = lam * phi_criterion(lap.model, ga) + (1.0 - lam) * phi_criterion(lap.model, gb);
    worst_convex = std::max(worst_convex, (phi_m - phi_c) / (1.0 + std::abs(phi_c)));

    auto f = [&](const Vector& g) { return g.array().log().sum() + log_det(dense_precision(lap.model, g)); };
    const double fm = f(gm), fc = lam * f(ga) + (1.0 - lam) * f(gb);
    worst_concave = std::max(worst_concave, (fc - fm) / (1.0 + std::abs(fc)));
  }

  // non-convexity witness for Student's t along random segments
  const ImageCase stc = image_case(8, 2, 3, desk_prior(PotentialKind::StudentT, 2.1));
  int samples = 0;
  bool witness = false;
  double excess = 0.0;
  while (samples < 10000 && !witness) {
    const Vector ga = random_gamma(stc.model.groups(), rng, 4.0) * 0.05;
    const Vector gb = random_gamma(stc.model.groups(), rng, 4.0) * 0.05;
    const double mid = phi_criterion(stc.model, 0.5 * (ga + gb));
    const double chord = 0.5 * (phi_criterion(stc.model, ga) + phi_criterion(stc.model, gb));
    samples += 3;
    if (mid > chord + 1e-8 * (1.0 + std::abs(chord))) witness = true, excess = mid - chord;
  }
  return {worst_convex <= 1e-8 && worst_concave <= 1e-8 && witness,
          fmt("laplace max rel. violation %.2e, log-det concavity max rel. violation %.2e (tol 1e-8); "
              "student t witness %s after %d evaluations (excess %.3g)",
              worst_convex, worst_concave, witness ? "found" : "not found", samples, excess)};
}

// phi at gamma +- h e_i from rank-one updates of a dense inverse; scalar groups only.
Vector fd_phi_gradient(const ModelSpec& m, const Vector& gamma) {
  const Matrix a = dense_precision(m, gamma);
  const Matrix ainv = a.llt().solve(Matrix::Identity(m.n(), m.n()));
  const Matrix& bd = m.B.dense();
  const Vector r = m.X.dense().transpose() * m.y / m.sigma2 + bd.transpose() * m.b_vector();
  const Matrix w = bd * ainv;  // rows b_i^T A^-1
  const Vector z = (w.array() * bd.array()).rowwise().sum();
  const Vector s = w * r;
  Vector grad(m.groups());
  for (Index i = 0; i < m.groups(); ++i) {
    const PotentialSpec& pot = m.potential(i);
    auto phi_delta = [&](double g) {
      const double c = 1.0 / g - 1.0 / gamma[i];
      const double denom = 1.0 + c * z[i];
      return std::log(denom) + h_value_derivs(pot, g).value + c * s[i] * s[i] / denom;
    };
    const double h = 1e-5 * gamma[i];
    grad[i] = (phi_delta(gamma[i] + h) - phi_delta(gamma[i] - h)) / (2.0 * h);
  }
  return grad;
}

struct DescentSummary {
  std::vector<double> min_gamma;
};
DescentSummary g_descent;

Outcome descent() {
  int monotone = 0, stationary = 0;
  double worst_rise = 0.0, worst_stat = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ImageCase c = image_case(16, 4, seed);
    DoubleLoopOptions opts;
    opts.outer_max = 60;
    opts.outer_tol = 1e-10;
    opts.monotonicity_tol = 1.0;  // measured below instead of thrown
    const VariationalState st = run_double_loop(c.model, opts);
    bool ok = true;
    for (std::size_t i = 1; i < st.phi_history.size(); ++i) {
      const double prev = st.phi_history[i - 1].second, cur = st.phi_history[i].second;
      const double rise = (cur - prev) / (1.0 + std::abs(prev));
      worst_rise = std::max(worst_rise, rise);
      ok = ok && rise <= 1e-8;
    }
    monotone += ok;
    const double phi = st.phi_history.back().second;
    const double g = fd_phi_gradient(c.model, st.gamma).cwiseAbs().maxCoeff() / (1.0 + std::abs(phi));
    worst_stat = std::max(worst_stat, g);
    stationary += g <= 1e-4;
    g_descent.min_gamma.push_back(st.gamma.minCoeff());
  }
  return {monotone == 20 && stationary == 20,
          fmt("20 models 16x16: nonincreasing %d/20 (max rel. rise %.2e), stationary %d/20 "
              "(max |grad|/(1+|phi|) %.2e, tol 1e-4)",
              monotone, worst_rise, stationary, worst_stat)};
}

Outcome barrier() {
  ModelSpec m;
  m.X = make_identity(1);
  m.B = make_identity(1);
  m.y = Vector::Zero(1);
  m.sigma2 = 1.0;
  m.potentials = {PotentialSpec::laplace(1.0)};
  m.layout = GroupLayout::scalar(1);
  const double p_small = phi_criterion(m, Vector::Constant(1, 1e-6));
  const double p_one = phi_criterion(m, Vector::Constant(1, 1.0));
  const double min_gamma =
      g_descent.min_gamma.empty() ? 0.0 : *std::min_element(g_descent.min_gamma.begin(), g_descent.min_gamma.end());
  return {min_gamma > 1e-12 && p_small > p_one,
          fmt("min gamma over %zu converged runs %.3e; phi(1e-6) = %.4f > phi(1) = %.4f", g_descent.min_gamma.size(),
              min_gamma, p_small, p_one)};
}

Outcome bounding_trend() {
  int good = 0;
  std::string gaps;
  double phi_scale = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ImageCase c = image_case(16, 4, seed);
    double gap[2];
    for (int b = 0; b < 2; ++b) {
      DoubleLoopOptions opts;
      opts.bounding = b == 0 ? Bounding::TypeA : Bounding::TypeB;
      opts.outer_max = 60;
      opts.outer_tol = 1e-10;
      const VariationalState st = run_double_loop(c.model, opts);
      const double final_phi = st.phi_history.back().second;
      double at5 = final_phi;
      for (const auto& [t, phi] : st.phi_history)
        if (t == 5) at5 = phi;
      gap[b] = at5 - final_phi;
      phi_scale = std::max(phi_scale, std::abs(final_phi));
    }
    good += gap[0] <= 1e-3 && gap[1] > 1e-3;
    gaps += fmt(" %.1e/%.1e", gap[0], gap[1]);
  }
  return {good >= 8, fmt("seeds with A within 1e-3 and B not, at outer loop 5: %d/10 (A/B gaps:%s; |phi| <= %.0f)", good,
                         gaps.c_str(), phi_scale)};
}

Outcome lanczos() {
  // exactness and monotonicity on a 16x16 model at a fitted gamma
  const ImageCase c = image_case(16, 4, 2);
  DoubleLoopOptions opts;
  opts.outer_max = 5;
  const VariationalState st = run_double_loop(c.model, opts);
  const Vector exact = exact_variances(c.model, st.gamma);
  const Index n = c.model.n();
  const LanczosFactorization f =
      lanczos_variances(precision_operator(c.model, st.gamma), n, c.model.B, static_cast<int>(n), true, 3);
  bool monotone = true, below = true;
  Vector prev = Vector::Zero(exact.size());
  for (int j = 1; j <= f.k; ++j) {
    const Vector zj = f.zhat_prefix(j);
    monotone = monotone && (zj.array() >= prev.array()).all();
    below = below && (zj.array() <= exact.array() + 1e-8).all();
    prev = zj;
  }
  const double rel = ((f.zhat - exact).array() / exact.array()).abs().maxCoeff();

  // which variances are captured first, on a 32x32 model at k = n/4
  const ImageCase big = image_case(32, 8, 1);
  DoubleLoopOptions bopts;
  bopts.outer_max = 3;
  const VariationalState bst = run_double_loop(big.model, bopts);
  const Vector bexact = exact_variances(big.model, bst.gamma);
  const LanczosFactorization bf = lanczos_variances(precision_operator(big.model, bst.gamma), big.model.n(),
                                                    big.model.B, static_cast<int>(big.model.n() / 4), true, 3);
  const DecileSummary d = profile_deciles(variance_error_profile(bf.zhat, bexact), 0.1);
  return {monotone && below && rel <= 1e-6 && d.top > d.bottom,
          fmt("monotone %s, underestimates %s, k=n rel. err %.2e (tol 1e-6), 32x32 k=n/4 deciles top %.3f bottom %.3f",
              monotone ? "yes" : "no", below ? "yes" : "no", rel, d.top, d.bottom)};
}

Outcome scoring() {
  double worst_full = 0.0;
  bool monotone = true, zero_ok = true;
  int agree = 0;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    const ImageCase c = image_case(8, 2, trial + 1);
    DoubleLoopOptions opts;
    opts.outer_max = 3;
    const VariationalState st = run_double_loop(c.model, opts);
    const DensePosterior post(c.model, st.gamma);
    const Index n = c.model.n();
    const LanczosFactorization full =
        lanczos_variances(precision_operator(c.model, st.gamma), n, c.model.B, static_cast<int>(n), true, trial);
    const LanczosFactorization half = full.prefix(static_cast<int>(n / 2));
    Index best_e = -1, best_l = -1;
    double se = -1.0, sl = -1.0;
    for (Index col = 0; col < 8; ++col) {
      const CandidateBlock cand = column_candidate(8, 8, col);
      const double e = score_exact(cand, post, c.sigma2);
      worst_full = std::max(worst_full, std::abs(score_lanczos(cand, full, c.sigma2) - e) / std::max(1.0, e));
      if (trial < 5) {
        double prev = 0.0;
        for (int k = 1; k <= full.k; ++k) {
          const double lk = score_lanczos(cand, full.prefix(k), c.sigma2);
          monotone = monotone && lk >= prev - 1e-10;
          prev = lk;
        }
      }
      const double l = score_lanczos(cand, half, c.sigma2);
      if (e > se) se = e, best_e = col;
      if (l > sl) sl = l, best_l = col;
    }
    agree += best_e == best_l;
    const CandidateBlock zero{0, make_empty(n)};
    zero_ok = zero_ok && score_exact(zero, post, c.sigma2) == 0.0 && score_lanczos(zero, full, c.sigma2) == 0.0;
  }
  return {worst_full <= 1e-6 && monotone && agree >= 45 && zero_ok,
          fmt("k=n max rel. diff %.2e (tol 1e-6), k-monotone %s, argmax agreement at k=n/2 %d/50, zero candidate %s",
              worst_full, monotone ? "yes" : "no", agree, zero_ok ? "0" : "nonzero")};
}

Outcome design() {
  const Index side = 32;
  const Vector u = app::make_phantom(side, 1);
  const double sigma2 = 1e-3 * u.squaredNorm() / static_cast<double>(u.size());
  const ImagePrior prior = make_image_prior(side, desk_prior());
  const std::vector<Index> init = baseline_design(BaselineKind::Lowpass, side, 4, {}, 0);
  std::vector<Index> pool;
  for (Index c = 0; c < side; ++c)
    if (std::find(init.begin(), init.end(), c) == init.end()) pool.push_back(c);
  const int rounds = 4;
  DesignOptions opts;
  opts.seed = 1;
  opts.outer_max = 5;
  const DesignTrajectory op = run_sequential_design(prior, u, sigma2, pool, init, rounds, opts);
  const double e_op = op.rounds.back().error;

  auto final_error = [&](BaselineKind kind, std::uint64_t seed) {
    std::vector<Index> d = init;
    const auto seq = baseline_design(kind, side, rounds, init, seed);
    d.insert(d.end(), seq.begin(), seq.end());
    return (reconstruct_map(prior, u, sigma2, d, opts) - u).norm();
  };
  const double e_ct = final_error(BaselineKind::Lowpass, 0);
  const double e_eq = final_error(BaselineKind::Equispaced, 0);
  double e_rd = 0.0;
  for (std::uint64_t k = 0; k < 5; ++k) e_rd += final_error(BaselineKind::RandomVd, 1000003 + k + 1) / 5.0;
  std::string sel;
  for (Index c : op.selected) sel += fmt(" %ld", static_cast<long>(c));
  // the same column set only differs by MAP warm starts, which must not count as a win
  auto better = [](double a, double b) { return a < b * (1.0 - 1e-6); };
  const auto ct_seq = baseline_design(BaselineKind::Lowpass, side, rounds, init, 0);
  const bool same_as_ct = std::is_permutation(ct_seq.begin(), ct_seq.end(), op.selected.begin(), op.selected.end());
  return {better(e_op, e_eq) && !same_as_ct && better(e_op, e_ct) && better(e_op, e_rd),
          fmt("final error op %.4f, eq %.4f, ct %.4f, rd mean %.4f (op picked%s%s)", e_op, e_eq, e_ct, e_rd,
              sel.c_str(), same_as_ct ? ", the low-pass columns" : "")};
}

Outcome ard_contrast() {
  const Index n = 128, m = 64;
  std::mt19937_64 rng(11);
  Eigen::HouseholderQR<Matrix> qr(gaussian(n, n, rng));
  const Matrix x = std::sqrt(2.0) * Matrix(qr.householderQ()).topRows(m);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Index> support(perm.begin(), perm.begin() + 5);
  std::sort(support.begin(), support.end());
  Vector u = Vector::Zero(n);
  std::normal_distribution<double> normal;
  for (Index i : support) u[i] = (normal(rng) > 0 ? 1.0 : -1.0) * (1.0 + std::abs(normal(rng)));

  ModelSpec model;
  model.X = make_dense(x);
  model.B = make_identity(n);
  model.y = x * u;
  model.sigma2 = 1e-6;
  model.potentials = {PotentialSpec::laplace(1.0)};
  model.layout = GroupLayout::scalar(std::vector<Index>(static_cast<std::size_t>(n), 0));

  const ArdResult ard = ard_estimate(model);
  const auto zeros = (ard.gamma.array() == 0.0).count();
  const VariationalState vi = run_double_loop(model, {.outer_max = 25});
  const auto vi_zeros = (vi.gamma.array() == 0.0).count();
  return {ard.support == support && zeros >= n - m && vi_zeros == 0,
          fmt("ARD support %s, %ld zero widths (need >= %ld); inference %ld zero widths, min gamma %.2e",
              ard.support == support ? "exact" : "wrong", static_cast<long>(zeros), static_cast<long>(n - m),
              static_cast<long>(vi_zeros), vi.gamma.minCoeff())};
}

Outcome student_t_trend() {
  double frac[2];
  const double nus[2] = {2.1, 2.01};
  for (int i = 0; i < 2; ++i) {
    const ImageCase c = image_case(32, 8, 1, desk_prior(PotentialKind::StudentT, nus[i]));
    const VariationalState st = run_double_loop(c.model, {.outer_max = 25});
    const PosteriorSummary ps = posterior_summary(st, c.model, VarianceSource::exact());
    const Vector s = c.model.B.apply(ps.mean);
    frac[i] = static_cast<double>((s.array().abs() < 1e-3).count()) / static_cast<double>(s.size());
  }
  return {frac[1] > frac[0], fmt("fraction |s_i| < 1e-3: nu 2.1 -> %.4f, nu 2.01 -> %.4f", frac[0], frac[1])};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"fenchel duality", duality},
      {"operator adjoints", adjoints},
      {"gradient and variance identities", identities},
      {"convexity", convexity},
      {"barrier and positivity", barrier},
      {"double-loop descent", descent},
      {"type A vs type B", bounding_trend},
      {"lanczos variances", lanczos},
      {"design scoring", scoring},
      {"design experiment", design},
      {"ARD vs inference", ard_contrast},
      {"student t sparsity", student_t_trend},
  };
  // descent runs first so that the positivity check can use its converged runs
  const std::vector<int> order = {0, 1, 2, 3, 5, 4, 6, 7, 8, 9, 10, 11};
  std::vector<std::string> lines(criteria.size());
  int failed = 0;
  for (int idx : order) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(idx)].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    lines[static_cast<std::size_t>(idx)] = fmt("criterion %2d %s: %s [%s] (%.1f s)", idx + 1,
                                               o.pass ? "PASS" : "FAIL", criteria[static_cast<std::size_t>(idx)].first,
                                               o.detail.c_str(), secs);
    std::fprintf(stderr, "(progress) %s\n", lines[static_cast<std::size_t>(idx)].c_str());
  }
  for (const std::string& l : lines) std::printf("%s\n", l.c_str());
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
