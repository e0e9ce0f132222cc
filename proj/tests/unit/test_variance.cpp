#include <doctest.h>

#include <cmath>
#include <random>

#include "slm/errors.hpp"
#include "slm/variance.hpp"
#include "support.hpp"

using namespace slm;

namespace {

ModelSpec diagonal_model(const Vector& a_diag, const LinearOperator& b) {
  // X = 0 rows, B given, gamma chosen by the caller so that A = B^T Gamma^-1 B
  ModelSpec m;
  m.X = make_empty(a_diag.size());
  m.B = b;
  m.y = Vector();
  m.sigma2 = 1.0;
  m.potentials = {PotentialSpec::laplace(1.0)};
  m.layout = GroupLayout::scalar(std::vector<Index>(static_cast<std::size_t>(b.rows()), 0));
  return m;
}

}  // namespace

TEST_SUITE("variance") {

TEST_CASE("exact variance examples") {
  // A = diag(2, 4) from B = I, gamma = (1/2, 1/4)
  const ModelSpec m = diagonal_model(Eigen::Vector2d(2, 4), make_identity(2));
  const Vector z = exact_variances(m, Eigen::Vector2d(0.5, 0.25));
  CHECK(z[0] == doctest::Approx(0.5));
  CHECK(z[1] == doctest::Approx(0.25));

  // A = 2I with X = sqrt(2) I, B the single row (1, 1)
  ModelSpec r;
  r.X = make_dense(std::sqrt(2.0) * Matrix::Identity(2, 2));
  r.B = make_dense(std::vector<std::vector<double>>{{1.0, 1.0}});
  r.y = Vector::Zero(2);
  r.sigma2 = 1.0;
  r.potentials = {PotentialSpec::laplace(1.0)};
  r.layout = GroupLayout::scalar(1);
  // gamma huge: A -> 2I
  const Vector zr = exact_variances(r, Vector::Constant(1, 1e15));
  CHECK(zr[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("variances never exceed gamma") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ModelSpec m = test::random_model(10, 6, PotentialSpec::laplace(1.0), seed);
    std::mt19937_64 rng(seed);
    Vector gamma(m.groups());
    for (Index g = 0; g < m.groups(); ++g) gamma[g] = std::exp(test::random_vector(1, rng)[0]);
    const Vector z = exact_variances(m, gamma);
    // oracle: B A^-1 B^T from a dense inverse
    const Matrix a = test::dense_precision(m, gamma);
    const Matrix ref = m.B.dense() * a.inverse() * m.B.dense().transpose();
    CHECK((z - ref.diagonal()).norm() <= 1e-10 * ref.diagonal().norm());
    for (Index i = 0; i < z.size(); ++i) CHECK(z[i] <= gamma[i] * (1.0 + 1e-12));
  }
}

TEST_CASE("dense posterior") {
  const ModelSpec m = test::random_model(8, 5, PotentialSpec::laplace(1.0), 3);
  const Vector gamma = Vector::LinSpaced(m.groups(), 0.5, 2.0);
  const DensePosterior post(m, gamma);
  const Matrix a = test::dense_precision(m, gamma);
  CHECK((post.precision() - a).norm() <= 1e-12 * a.norm());
  CHECK(post.log_det() == doctest::Approx(std::log(a.determinant())).epsilon(1e-12));
  const Vector rhs = m.X.dense().transpose() * m.y / m.sigma2;
  CHECK((post.mean() - a.ldlt().solve(rhs)).norm() <= 1e-10);
  CHECK((post.inverse() - a.inverse()).norm() <= 1e-10);

  const PrecisionAssembler assembler(m);
  CHECK((assembler.assemble(gamma) - a).norm() <= 1e-12 * a.norm());
  const SpdMap op = precision_operator(m, gamma);
  std::mt19937_64 rng(1);
  const Vector v = test::random_vector(8, rng);
  CHECK((op(v) - a * v).norm() <= 1e-12 * (a * v).norm());
}

TEST_CASE("log det gradient is the variance") {
  const ModelSpec m = test::random_model(8, 6, PotentialSpec::laplace(1.0), 12);
  Vector gamma = Vector::LinSpaced(m.groups(), 0.3, 3.0);
  const Vector z = exact_variances(m, gamma);
  for (Index i = 0; i < m.groups(); i += 3) {
    // d log|A| / d(1/gamma_i) = z_i
    const double pi = 1.0 / gamma[i], h = 1e-5 * pi;
    Vector gp = gamma, gm = gamma;
    gp[i] = 1.0 / (pi + h);
    gm[i] = 1.0 / (pi - h);
    const double fd = (test::dense_log_det(test::dense_precision(m, gp)) -
                       test::dense_log_det(test::dense_precision(m, gm))) / (2.0 * h);
    CHECK(z[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("lanczos in one dimension is exact") {
  const double a = 3.7;
  const LanczosFactorization f =
      lanczos_variances([a](const Vector& v) { return Vector(a * v); }, 1, make_identity(1), 1, true, 0);
  CHECK(f.k == 1);
  CHECK(f.zhat[0] == doctest::Approx(1.0 / a).epsilon(1e-15));
}

TEST_CASE("lanczos factorization structure and accuracy") {
  const Index n = 64;
  std::mt19937_64 rng(21);
  const Matrix a = test::random_spd(n, rng);
  const LinearOperator b = make_dense(test::random_matrix(40, n, rng));
  const Vector exact = (b.dense() * a.inverse() * b.dense().transpose()).diagonal();
  const SpdMap op = [&](const Vector& v) { return Vector(a * v); };

  const LanczosFactorization f = lanczos_variances(op, n, b, static_cast<int>(n), true, 5);
  CHECK(f.k == n);
  CHECK(f.orthogonality_loss() <= 1e-8);
  const Matrix t = f.tridiagonal();
  CHECK((f.Q.transpose() * a * f.Q - t).cwiseAbs().maxCoeff() <= 1e-6);
  const Matrix l = f.cholesky_factor();
  CHECK((l * l.transpose() - t).cwiseAbs().maxCoeff() <= 1e-10 * t.cwiseAbs().maxCoeff());
  CHECK(((f.zhat - exact).array() / exact.array()).abs().maxCoeff() <= 1e-6);

  for (int j = 1; j <= f.k; ++j) {
    const Vector zj = f.zhat_prefix(j);
    CHECK((zj.array() <= exact.array() + 1e-8).all());
    if (j > 1) CHECK((zj.array() >= f.zhat_prefix(j - 1).array()).all());
  }
  const LanczosFactorization p = f.prefix(10);
  CHECK(p.k == 10);
  CHECK(p.Q.cols() == 10);
  CHECK((p.zhat - f.zhat_prefix(10)).norm() <= 1e-14);

  // without reorthogonalization the estimate still never exceeds the truth early on
  const LanczosFactorization nr = lanczos_variances(op, n, b, 16, false, 5);
  CHECK_FALSE(nr.reorthogonalized);
  CHECK((nr.zhat.array() <= exact.array() + 1e-8).all());
}

TEST_CASE("lanczos breakdown on an invariant subspace") {
  // A = I: the Krylov space has dimension one
  const LanczosFactorization f =
      lanczos_variances([](const Vector& v) { return v; }, 10, make_identity(10), 10, true, 3);
  CHECK(f.breakdown);
  CHECK(f.k == 1);
}

TEST_CASE("variance error profile") {
  const Vector z = Eigen::Vector4d(1.0, 2.0, 0.0, 4.0);
  VarianceProfile same = variance_error_profile(z, z);
  CHECK(same.excluded == 1);
  for (double r : same.ratio) CHECK(r == 1.0);

  const Vector zk = Eigen::Vector4d(0.9, 1.0, 0.0, 3.9);
  const VarianceProfile p = variance_error_profile(zk, z);
  for (double r : p.ratio) CHECK(r <= 1.0 + 1e-8);
  const DecileSummary d = profile_deciles(p, 0.34);
  CHECK(d.top == doctest::Approx(3.9 / 4.0));
  CHECK(d.bottom == doctest::Approx(0.9));
}

TEST_CASE("dense guard") {
  const ModelSpec big = test::image_model(128, 4, 1);
  CHECK_THROWS_AS(DensePosterior(big, Vector::Ones(big.groups())), UnsupportedError);
}

}  // TEST_SUITE
