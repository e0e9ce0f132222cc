#include "slm/design.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "slm/errors.hpp"

namespace slm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double log_det_spd(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  const Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw FactorizationError("score: Gram matrix not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// log|I + W^T W| through the smaller Gram side.
double log_det_identity_plus_gram(const Matrix& w) {
  if (w.size() == 0) return 0.0;
  if (w.rows() >= w.cols()) {
    Matrix g = w.transpose() * w;
    g.diagonal().array() += 1.0;
    return log_det_spd(g);
  }
  Matrix g = w * w.transpose();
  g.diagonal().array() += 1.0;
  return log_det_spd(g);
}

int side_log2(Index side) {
  int l = 0;
  while ((Index{1} << l) < side) ++l;
  return l;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ImagePrior make_image_prior(Index side, const ImagePriorParams& params) {
  if (!(params.tau_a > 0.0) || !(params.tau_r > 0.0)) throw DomainError("image prior: scales must be positive");
  const int l = side_log2(side);
  const int levels = params.haar_levels > 0 ? params.haar_levels : std::max(1, l - 2);
  ImagePrior p;
  p.side = side;
  const LinearOperator haar = make_haar_wavelet_2d(side, levels);
  p.wavelet_rows = haar.rows();

  auto potential = [&](double tau) {
    switch (params.kind) {
      case PotentialKind::Laplace:
        return PotentialSpec::laplace(tau);
      case PotentialKind::StudentT:
        return PotentialSpec::student_t_matching_laplace(params.nu, tau);
      case PotentialKind::Bernoulli:
        break;
    }
    throw UnsupportedError("image prior: potentials must be Laplace or Student's t");
  };
  p.potentials = {potential(params.tau_a), potential(params.tau_r)};

  const GroupLayout wavelet = GroupLayout::scalar(std::vector<Index>(static_cast<std::size_t>(haar.rows()), 0));
  if (params.isotropic_tv) {
    const LinearOperator tv = make_isotropic_tv_2d(side, side);
    const std::vector<Index> sizes = isotropic_tv_group_sizes(side, side);
    p.B = stack({haar, tv});
    p.layout = wavelet.append(GroupLayout::from_sizes(sizes, std::vector<Index>(sizes.size(), 0)), 1);
  } else {
    const LinearOperator dx = make_finite_difference_2d(side, side, Axis::Horizontal);
    const LinearOperator dy = make_finite_difference_2d(side, side, Axis::Vertical);
    p.B = stack({haar, dx, dy});
    p.layout = wavelet.append(
        GroupLayout::scalar(std::vector<Index>(static_cast<std::size_t>(dx.rows() + dy.rows()), 0)), 1);
  }
  return p;
}

ModelSpec make_model(const ImagePrior& prior, const LinearOperator& x, const Vector& y, double sigma2) {
  ModelSpec m;
  m.X = x;
  m.B = prior.B;
  m.y = y;
  m.sigma2 = sigma2;
  m.potentials = prior.potentials;
  m.layout = prior.layout;
  m.validate();
  return m;
}

CandidateBlock column_candidate(Index height, Index width, Index column) {
  return {column, make_partial_orthotransform_2d(height, width, {column})};
}

double score_exact(const CandidateBlock& candidate, const DensePosterior& posterior, double sigma2) {
  if (candidate.X.rows() == 0) return 0.0;
  const Matrix xt = candidate.X.dense().transpose();
  const Matrix w = posterior.llt().matrixL().solve(xt) / std::sqrt(sigma2);
  return log_det_identity_plus_gram(w);
}

double score_lanczos(const CandidateBlock& candidate, const LanczosFactorization& fact, double sigma2) {
  if (candidate.X.rows() == 0 || fact.k == 0) return 0.0;
  const Index d = candidate.X.rows();
  Matrix p(d, fact.k);
  for (int j = 0; j < fact.k; ++j) p.col(j) = candidate.X.apply(fact.Q.col(j));
  // Rows of V* solve L_k w = p^T: forward substitution on the bidiagonal factor.
  Matrix v(d, fact.k);
  for (int j = 0; j < fact.k; ++j) {
    const double ej = fact.e[static_cast<std::size_t>(j)];
    if (!(ej > 0.0)) throw NumericalError("score_lanczos: zero pivot in L_k", j);
    if (j == 0) {
      v.col(0) = p.col(0) / ej;
    } else {
      v.col(j) = (p.col(j) - fact.d[static_cast<std::size_t>(j - 1)] * v.col(j - 1)) / ej;
    }
  }
  v /= std::sqrt(sigma2);
  return log_det_identity_plus_gram(v.transpose());
}

const char* to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Lowpass:
      return "ct";
    case BaselineKind::Equispaced:
      return "eq";
    case BaselineKind::RandomVd:
      return "rd";
  }
  return "?";
}

std::vector<Index> baseline_design(BaselineKind kind, Index width, Index count,
                                   const std::vector<Index>& init, std::uint64_t seed) {
  std::vector<bool> taken(static_cast<std::size_t>(width), false);
  for (Index c : init) {
    if (c < 0 || c >= width) throw DomainError("baseline: init column out of range");
    if (taken[static_cast<std::size_t>(c)]) throw DomainError("baseline: init column repeated");
    taken[static_cast<std::size_t>(c)] = true;
  }
  std::vector<Index> free;
  for (Index c = 0; c < width; ++c) {
    if (!taken[static_cast<std::size_t>(c)]) free.push_back(c);
  }
  const Index available = static_cast<Index>(free.size());
  if (count < 0 || count > available) {
    throw DomainError("baseline: cannot add " + std::to_string(count) + " of " +
                      std::to_string(available) + " free columns");
  }
  const double center = 0.5 * static_cast<double>(width - 1);
  std::vector<Index> out;
  switch (kind) {
    case BaselineKind::Lowpass: {
      std::vector<Index> order = free;
      std::stable_sort(order.begin(), order.end(), [center](Index a, Index b) {
        return std::abs(static_cast<double>(a) - center) < std::abs(static_cast<double>(b) - center);
      });
      out.assign(order.begin(), order.begin() + count);
      break;
    }
    case BaselineKind::Equispaced:
      for (Index j = 0; j < count; ++j) out.push_back(free[static_cast<std::size_t>((j * available) / count)]);
      break;
    case BaselineKind::RandomVd: {
      std::mt19937_64 rng(seed);
      std::vector<double> weight(free.size());
      for (std::size_t i = 0; i < free.size(); ++i) {
        const double r = std::abs(static_cast<double>(free[i]) - center) / static_cast<double>(width);
        weight[i] = 1.0 / ((1.0 + r) * (1.0 + r));
      }
      for (Index j = 0; j < count; ++j) {
        std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
        const std::size_t i = pick(rng);
        out.push_back(free[i]);
        weight[i] = 0.0;
      }
      break;
    }
  }
  return out;
}

Vector simulate_measurements(const Vector& u_true, Index side, const std::vector<Index>& columns,
                             double sigma2, std::uint64_t seed) {
  const double sigma = std::sqrt(sigma2);
  Vector y(side * static_cast<Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const LinearOperator x = make_partial_orthotransform_2d(side, side, {columns[j]});
    Vector block = x.apply(u_true);
    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(columns[j])};
    std::mt19937_64 rng(sseq);
    std::normal_distribution<double> normal;
    for (Index r = 0; r < side; ++r) block[r] += sigma * normal(rng);
    y.segment(static_cast<Index>(j) * side, side) = block;
  }
  return y;
}

Vector reconstruct_map(const ImagePrior& prior, const Vector& u_true, double sigma2,
                       const std::vector<Index>& columns, const DesignOptions& options,
                       const Vector* warm_start) {
  const Index side = prior.side;
  const ModelSpec model = make_model(prior, make_partial_orthotransform_2d(side, side, columns),
                                     simulate_measurements(u_true, side, columns, sigma2, options.seed), sigma2);
  const Vector u0 = warm_start ? *warm_start : model.X.apply_adjoint(model.y);
  return map_estimate(model, options.map_epsilon, u0, options.map_inner);
}

DesignTrajectory run_sequential_design(const ImagePrior& prior, const Vector& u_true, double sigma2,
                                       const std::vector<Index>& pool, const std::vector<Index>& init,
                                       int rounds, const DesignOptions& options) {
  const Index side = prior.side;
  if (u_true.size() != side * side) throw ShapeError("design: ground truth has wrong size");
  for (Index c : init) {
    if (std::find(pool.begin(), pool.end(), c) != pool.end()) {
      throw DomainError("design: init columns must not be in the candidate pool");
    }
  }
  DesignTrajectory out;
  out.design = init;
  std::vector<Index> remaining = pool;
  std::sort(remaining.begin(), remaining.end());
  remaining.erase(std::unique(remaining.begin(), remaining.end()), remaining.end());

  std::optional<Vector> gamma;
  Vector recon;
  double pending_score = kNaN;
  Index pending_id = -1;
  for (int r = 0;; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec model =
        make_model(prior, make_partial_orthotransform_2d(side, side, out.design),
                   simulate_measurements(u_true, side, out.design, sigma2, options.seed), sigma2);
    DoubleLoopOptions dl;
    dl.bounding = options.bounding;
    dl.variance = options.variance;
    dl.outer_max = options.outer_max;
    dl.inner = options.inner;
    dl.gamma_init = gamma;
    const VariationalState state = run_double_loop(model, dl);
    gamma = state.gamma;

    const Vector u0 = recon.size() ? recon : Vector(model.X.apply_adjoint(model.y));
    recon = map_estimate(model, options.map_epsilon, u0, options.map_inner);

    DesignRound row;
    row.round = r;
    row.selected = pending_id;
    row.score = pending_score;
    row.phi = state.phi_history.empty() ? kNaN : state.phi_history.back().second;
    row.error = (recon - u_true).norm();

    if (r == rounds || remaining.empty()) {
      row.wall_time = options.timing ? seconds_since(t0) : 0.0;
      out.rounds.push_back(row);
      break;
    }

    std::vector<std::pair<Index, double>> table;
    if (options.variance.is_exact()) {
      const DensePosterior post(model, state.gamma);
      for (Index c : remaining) table.emplace_back(c, score_exact(column_candidate(side, side, c), post, sigma2));
    } else {
      const int k = static_cast<int>(std::min<Index>(options.variance.k, model.n()));
      const LanczosFactorization f = lanczos_variances(precision_operator(model, state.gamma), model.n(),
                                                       model.B, k, true, options.variance.seed);
      for (Index c : remaining) table.emplace_back(c, score_lanczos(column_candidate(side, side, c), f, sigma2));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.size(); ++i) {
      if (table[i].second > table[best].second) best = i;  // strict: ties keep the lower id
    }
    pending_id = table[best].first;
    pending_score = table[best].second;
    out.score_tables.push_back(std::move(table));
    out.selected.push_back(pending_id);
    out.design.push_back(pending_id);
    remaining.erase(std::find(remaining.begin(), remaining.end(), pending_id));
    row.wall_time = options.timing ? seconds_since(t0) : 0.0;
    out.rounds.push_back(row);
  }
  out.reconstruction = recon;
  return out;
}

DesignTrajectory run_fixed_design(const ImagePrior& prior, const Vector& u_true, double sigma2,
                                  const std::vector<Index>& init, const std::vector<Index>& sequence,
                                  const DesignOptions& options) {
  DesignTrajectory out;
  out.design = init;
  Vector recon;
  for (std::size_t r = 0; r <= sequence.size(); ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    if (r > 0) {
      out.design.push_back(sequence[r - 1]);
      out.selected.push_back(sequence[r - 1]);
    }
    recon = reconstruct_map(prior, u_true, sigma2, out.design, options, recon.size() ? &recon : nullptr);
    DesignRound row;
    row.round = static_cast<int>(r);
    row.selected = r > 0 ? sequence[r - 1] : -1;
    row.score = kNaN;
    row.phi = kNaN;
    row.error = (recon - u_true).norm();
    row.wall_time = options.timing ? seconds_since(t0) : 0.0;
    out.rounds.push_back(row);
  }
  out.reconstruction = recon;
  return out;
}

}  // namespace slm
