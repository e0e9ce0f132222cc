#include <benchmark/benchmark.h>

#include <random>

#include "slm/design.hpp"

namespace {

using namespace slm;

Vector noise(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

void BM_PriorForward(benchmark::State& state) {
  const Index side = state.range(0);
  const ImagePrior prior = make_image_prior(side, {});
  const Vector u = noise(side * side, 1);
  for (auto _ : state) benchmark::DoNotOptimize(prior.B.apply(u));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_PriorForward)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

void BM_PriorAdjoint(benchmark::State& state) {
  const Index side = state.range(0);
  const ImagePrior prior = make_image_prior(side, {});
  const Vector s = noise(prior.B.rows(), 2);
  for (auto _ : state) benchmark::DoNotOptimize(prior.B.apply_adjoint(s));
}
BENCHMARK(BM_PriorAdjoint)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

void BM_PartialDct(benchmark::State& state) {
  const Index side = state.range(0);
  std::vector<Index> cols;
  for (Index c = 0; c < side / 4; ++c) cols.push_back(c);
  const LinearOperator x = make_partial_orthotransform_2d(side, side, cols);
  const Vector u = noise(side * side, 3);
  for (auto _ : state) benchmark::DoNotOptimize(x.apply_adjoint(x.apply(u)));
}
BENCHMARK(BM_PartialDct)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

}  // namespace
