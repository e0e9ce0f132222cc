#pragma once

// Shared fixtures and independent reference computations for the unit tests.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include "slm/design.hpp"

namespace slm::test {

inline Vector random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline Matrix random_spd(Index n, std::mt19937_64& rng) {
  Matrix g = random_matrix(n, n, rng);
  return g * g.transpose() / static_cast<double>(n) + Matrix::Identity(n, n);
}

inline Matrix random_orthogonal(Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
  return qr.householderQ();
}

/// Root of a monotone increasing scalar function on [lo, hi].
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Golden-section minimum of a unimodal function on [lo, hi].
inline double golden_min(const std::function<double(double)>& f, double lo, double hi,
                         int iterations = 200) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iterations; ++it) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - r * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + r * (b - a); fd = f(d);
    }
  }
  return f(0.5 * (a + b));
}

/// Dense oracle for log|A| with A = sigma^-2 X^T X + B^T diag(1/gamma expanded) B.
inline Matrix dense_precision(const ModelSpec& model, const Vector& gamma) {
  const Matrix& x = model.X.dense();
  const Matrix& b = model.B.dense();
  const Vector w = model.layout.expand(gamma).cwiseInverse();
  return x.transpose() * x / model.sigma2 + b.transpose() * w.asDiagonal() * b;
}

inline double dense_log_det(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Small random model: n unknowns, m random measurements, B = [I; D] with scalar potentials.
inline ModelSpec random_model(Index n, Index m, const PotentialSpec& pot, std::uint64_t seed,
                              double sigma2 = 0.1) {
  std::mt19937_64 rng(seed);
  ModelSpec model;
  model.X = make_dense(random_matrix(m, n, rng) / std::sqrt(static_cast<double>(n)));
  Matrix b = Matrix::Zero(2 * n - 1, n);
  for (Index i = 0; i < n; ++i) b(i, i) = 1.0;
  for (Index i = 0; i + 1 < n; ++i) {
    b(n + i, i) = -1.0;
    b(n + i, i + 1) = 1.0;
  }
  model.B = make_dense(b);
  model.y = random_vector(m, rng);
  model.sigma2 = sigma2;
  model.potentials = {pot};
  model.layout = GroupLayout::scalar(std::vector<Index>(static_cast<std::size_t>(b.rows()), 0));
  model.validate();
  return model;
}

/// Image model: partial transform of a seeded smooth-plus-blocks image with the default prior.
inline ModelSpec image_model(Index side, Index columns, std::uint64_t seed,
                             const ImagePriorParams& params = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector u(side * side);
  const double r0 = unif(rng) * side, c0 = unif(rng) * side;
  for (Index r = 0; r < side; ++r)
    for (Index c = 0; c < side; ++c) {
      const double block = (r >= side / 4 && r < 3 * side / 4 && c >= side / 4 && c < side / 2) ? 0.6 : 0.0;
      const double d2 = (r - r0) * (r - r0) + (c - c0) * (c - c0);
      u[r * side + c] = block + 0.4 * std::exp(-d2 / (side * side / 8.0));
    }
  const double sigma2 = 1e-3 * u.squaredNorm() / static_cast<double>(u.size());
  const ImagePrior prior = make_image_prior(side, params);
  const auto cols = baseline_design(BaselineKind::Lowpass, side, columns, {}, 0);
  const Vector y = simulate_measurements(u, side, cols, sigma2, seed);
  return make_model(prior, make_partial_orthotransform_2d(side, side, cols), y, sigma2);
}

}  // namespace slm::test
