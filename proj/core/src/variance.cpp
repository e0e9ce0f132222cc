#include "slm/variance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "slm/errors.hpp"

namespace slm {

namespace {

void check_gamma(const ModelSpec& model, const Vector& gamma) {
  if (gamma.size() != model.groups()) throw ShapeError("gamma needs one entry per group");
  if (!(gamma.array() > 0.0).all()) throw DomainError("gamma must be positive");
}

void check_guard(const ModelSpec& model) {
  if (model.n() > kDenseGuard) {
    throw UnsupportedError("dense factorization refused above n = " + std::to_string(kDenseGuard));
  }
}

}  // namespace

PrecisionAssembler::PrecisionAssembler(const ModelSpec& model) : model_(&model) {
  check_guard(model);
  if (model.m() > 0) {
    const Matrix& x = model.X.dense();
    xtx_ = (x.transpose() * x) / model.sigma2;
  } else {
    xtx_ = Matrix::Zero(model.n(), model.n());
  }
}

Matrix PrecisionAssembler::assemble(const Vector& gamma) const {
  const ModelSpec& model = *model_;
  check_gamma(model, gamma);
  const Vector pi = model.layout.expand(gamma.cwiseInverse());
  const SparseMatrix& b = model.B.sparse();
  const SparseMatrix btb = b.transpose() * pi.asDiagonal() * b;
  Matrix a = xtx_;
  a += Matrix(btb);
  return a;
}

SpdMap precision_operator(const ModelSpec& model, const Vector& gamma) {
  check_gamma(model, gamma);
  const Vector pi = model.layout.expand(gamma.cwiseInverse());
  const double inv_s2 = 1.0 / model.sigma2;
  return [&model, pi, inv_s2](const Vector& v) -> Vector {
    Vector out = inv_s2 * model.X.apply_adjoint(model.X.apply(v));
    out += model.B.apply_adjoint(pi.cwiseProduct(model.B.apply(v)));
    return out;
  };
}

DensePosterior::DensePosterior(const ModelSpec& model, const Vector& gamma)
    : DensePosterior(PrecisionAssembler(model), gamma) {}

DensePosterior::DensePosterior(const PrecisionAssembler& assembler, const Vector& gamma)
    : model_(&assembler.model()), a_(assembler.assemble(gamma)) {
  factor();
}

void DensePosterior::factor() {
  llt_.compute(a_);
  if (llt_.info() != Eigen::Success) throw FactorizationError("posterior precision A is not positive definite");
}

double DensePosterior::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Vector DensePosterior::mean() const {
  const ModelSpec& model = *model_;
  Vector rhs = model.X.apply_adjoint(model.y) / model.sigma2;
  const Vector b = model.b_vector();
  if (b.any()) rhs += model.B.apply_adjoint(b);
  return solve(rhs);
}

const Matrix& DensePosterior::inverse() const {
  if (!inverse_) inverse_ = llt_.solve(Matrix::Identity(a_.rows(), a_.cols()));
  return *inverse_;
}

Vector DensePosterior::variances() const {
  const SparseMatrix& b = model_->B.sparse();
  const Matrix ba = b * inverse();
  // Row-wise (B A^-1) . B over the compressed columns of B.
  Vector out = Vector::Zero(b.rows());
  for (Index j = 0; j < b.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(b, j); it; ++it) out[it.row()] += ba(it.row(), j) * it.value();
  }
  return out;
}

Vector DensePosterior::group_variances() const { return model_->layout.sum_groups(variances()); }

Vector exact_variances(const ModelSpec& model, const Vector& gamma) {
  return DensePosterior(model, gamma).variances();
}

Vector LanczosFactorization::zhat_prefix(int j) const {
  if (j < 0 || j > k) throw DomainError("zhat_prefix: step count out of range");
  if (j == 0) return Vector::Zero(V.rows());
  return V.leftCols(j).cwiseAbs2().rowwise().sum();
}

LanczosFactorization LanczosFactorization::prefix(int j) const {
  if (j < 0 || j > k) throw DomainError("prefix: step count out of range");
  LanczosFactorization out;
  out.Q = Q.leftCols(j);
  out.V = V.leftCols(j);
  out.alpha.assign(alpha.begin(), alpha.begin() + j);
  out.e.assign(e.begin(), e.begin() + j);
  const int off = std::max(j - 1, 0);
  out.beta.assign(beta.begin(), beta.begin() + std::min<std::ptrdiff_t>(off, static_cast<std::ptrdiff_t>(beta.size())));
  out.d.assign(d.begin(), d.begin() + std::min<std::ptrdiff_t>(off, static_cast<std::ptrdiff_t>(d.size())));
  out.zhat = zhat_prefix(j);
  out.k = j;
  out.breakdown = breakdown && j == k;
  out.reorthogonalized = reorthogonalized;
  return out;
}

double LanczosFactorization::orthogonality_loss() const {
  if (k == 0) return 0.0;
  const Matrix g = Q.transpose() * Q - Matrix::Identity(k, k);
  return g.cwiseAbs().maxCoeff();
}

Matrix LanczosFactorization::tridiagonal() const {
  Matrix t = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    t(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  return t;
}

Matrix LanczosFactorization::cholesky_factor() const {
  Matrix l = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    l(i, i) = e[static_cast<std::size_t>(i)];
    if (i + 1 < k) l(i + 1, i) = d[static_cast<std::size_t>(i)];
  }
  return l;
}

LanczosFactorization lanczos_variances(const SpdMap& a, Index n, const LinearOperator& b, int k_max,
                                       bool reorthogonalize, std::uint64_t seed) {
  if (b.cols() != n) throw ShapeError("lanczos: B columns must equal n");
  if (k_max < 1 || k_max > n) throw DomainError("lanczos: k_max must lie in [1, n]");
  LanczosFactorization f;
  f.reorthogonalized = reorthogonalize;
  f.Q.resize(n, k_max);
  f.V.resize(b.rows(), k_max);
  f.zhat = Vector::Zero(b.rows());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector q(n);
  for (Index i = 0; i < n; ++i) q[i] = normal(rng);
  q.normalize();

  Vector q_prev = Vector::Zero(n);
  Vector v_prev = Vector::Zero(b.rows());
  double beta_prev = 0.0;
  double scale = 0.0;
  for (int l = 0; l < k_max; ++l) {
    f.Q.col(l) = q;
    Vector w = a(q);
    const double alpha = q.dot(w);
    if (!std::isfinite(alpha)) throw NumericalError("lanczos: non-finite alpha", l);
    w -= alpha * q + beta_prev * q_prev;
    if (reorthogonalize) {
      for (int pass = 0; pass < 2; ++pass) {
        const auto basis = f.Q.leftCols(l + 1);
        w -= basis * (basis.transpose() * w);
      }
    }
    // Bidiagonal Cholesky step of T_k.
    double dl = 0.0;
    double el2 = alpha;
    if (l > 0) {
      dl = beta_prev / f.e.back();
      el2 = alpha - dl * dl;
    }
    if (!(el2 > 0.0)) {
      f.breakdown = true;  // T_k lost definiteness to rounding: stop before using it
      break;
    }
    const double el = std::sqrt(el2);
    if (l > 0) f.d.push_back(dl);
    f.e.push_back(el);
    f.alpha.push_back(alpha);
    const Vector v = (b.apply(q) - dl * v_prev) / el;
    f.V.col(l) = v;
    f.zhat += v.cwiseAbs2();
    f.k = l + 1;
    v_prev = v;

    scale = std::max({scale, std::abs(alpha), beta_prev});
    const double beta = w.norm();
    if (l + 1 == k_max) break;
    if (beta < 1e-12 * scale) {
      f.breakdown = true;
      break;
    }
    f.beta.push_back(beta);
    q_prev = q;
    q = w / beta;
    beta_prev = beta;
  }
  f.Q.conservativeResize(n, f.k);
  f.V.conservativeResize(b.rows(), f.k);
  return f;
}

VarianceProfile variance_error_profile(const Vector& zhat_k, const Vector& zhat_exact) {
  if (zhat_k.size() != zhat_exact.size()) throw ShapeError("variance profile: length mismatch");
  VarianceProfile p;
  for (Index i = 0; i < zhat_k.size(); ++i) {
    if (zhat_exact[i] == 0.0) {
      ++p.excluded;
      continue;
    }
    p.exact.push_back(zhat_exact[i]);
    p.ratio.push_back(zhat_k[i] / zhat_exact[i]);
  }
  return p;
}

DecileSummary profile_deciles(const VarianceProfile& profile, double fraction) {
  const std::size_t n = profile.exact.size();
  if (n == 0) return {};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return profile.exact[a] < profile.exact[b]; });
  const std::size_t c = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(n)));
  DecileSummary s;
  for (std::size_t i = 0; i < c; ++i) {
    s.bottom += profile.ratio[order[i]];
    s.top += profile.ratio[order[n - 1 - i]];
  }
  s.bottom /= static_cast<double>(c);
  s.top /= static_cast<double>(c);
  return s;
}

}  // namespace slm
