#include <benchmark/benchmark.h>

#include "slm/app/synth.hpp"
#include "slm/design.hpp"

namespace {

using namespace slm;

struct Problem {
  ModelSpec model;
  Vector gamma;
};

Problem problem(Index side) {
  const Vector u = app::make_phantom(side, 1);
  const double sigma2 = 1e-3 * u.squaredNorm() / static_cast<double>(u.size());
  const ImagePrior prior = make_image_prior(side, {.tau_a = 17.85, .tau_r = 10.2});
  const auto cols = baseline_design(BaselineKind::Lowpass, side, side / 4, {}, 0);
  const Vector y = simulate_measurements(u, side, cols, sigma2, 1);
  Problem p{make_model(prior, make_partial_orthotransform_2d(side, side, cols), y, sigma2), {}};
  p.gamma = Vector::Constant(p.model.groups(), 0.1);
  return p;
}

void BM_Lanczos(benchmark::State& state) {
  const Problem p = problem(state.range(0));
  const int k = static_cast<int>(state.range(1));
  const SpdMap op = precision_operator(p.model, p.gamma);
  for (auto _ : state) benchmark::DoNotOptimize(lanczos_variances(op, p.model.n(), p.model.B, k, true, 0).zhat);
}
BENCHMARK(BM_Lanczos)->Args({32, 50})->Args({64, 50})->Args({64, 150})->Unit(benchmark::kMillisecond);

void BM_IrlsInner(benchmark::State& state) {
  const Problem p = problem(state.range(0));
  const auto bc = initial_bound(p.model, Bounding::TypeA, 1.0, 1.0);
  const Vector u0 = p.model.X.apply_adjoint(p.model.y);
  for (auto _ : state) benchmark::DoNotOptimize(irls_minimize(p.model, bc, u0).u);
}
BENCHMARK(BM_IrlsInner)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ScoreLanczos(benchmark::State& state) {
  const Index side = state.range(0);
  const Problem p = problem(side);
  const LanczosFactorization f =
      lanczos_variances(precision_operator(p.model, p.gamma), p.model.n(), p.model.B, 50, true, 0);
  const CandidateBlock cand = column_candidate(side, side, 0);
  for (auto _ : state) benchmark::DoNotOptimize(score_lanczos(cand, f, p.model.sigma2));
}
BENCHMARK(BM_ScoreLanczos)->Arg(32)->Arg(64);

void BM_ScoreExact(benchmark::State& state) {
  const Index side = state.range(0);
  const Problem p = problem(side);
  const DensePosterior post(p.model, p.gamma);
  const CandidateBlock cand = column_candidate(side, side, 0);
  for (auto _ : state) benchmark::DoNotOptimize(score_exact(cand, post, p.model.sigma2));
}
BENCHMARK(BM_ScoreExact)->Arg(16)->Arg(32);

}  // namespace
