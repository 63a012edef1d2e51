#include <benchmark/benchmark.h>

#include <random>

#include "gplsiam/basis.hpp"
#include "gplsiam/numkernel.hpp"

using namespace gplsiam;

namespace {

Vector uniform_sample(Index n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Vector u(n);
  for (auto& x : u) x = d(rng);
  return u;
}

Matrix normal_matrix(Index rows, Index cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Matrix m(rows, cols);
  for (auto& x : m.reshaped()) x = d(rng);
  return m;
}

void BM_EvalBasis(benchmark::State& state) {
  const Vector u = uniform_sample(state.range(0), 1);
  const KnotVector kv = make_knots(u, 24, 4, 0.001);
  for (auto _ : state) benchmark::DoNotOptimize(eval_basis(kv, u));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EvalBasis)->Arg(1000)->Arg(17379);

void BM_BasisBlock(benchmark::State& state) {
  const Vector u = uniform_sample(state.range(0), 2);
  const KnotVector kv = make_knots(u, 24, 4, 0.001);
  for (auto _ : state) benchmark::DoNotOptimize(build_basis_block(kv, u));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BasisBlock)->Arg(1000)->Arg(17379);

void BM_WeightedCrossprod(benchmark::State& state) {
  const Matrix M = normal_matrix(state.range(0), state.range(1), 3);
  const Vector w = uniform_sample(state.range(0), 4).array() + 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(weighted_crossprod(M, w));
}
BENCHMARK(BM_WeightedCrossprod)->Args({800, 23})->Args({17379, 83});

void BM_CholeskyInverseFactor(benchmark::State& state) {
  const Index dim = state.range(0);
  const Matrix G = normal_matrix(dim + 10, dim, 5);
  const Matrix A = G.transpose() * G + Matrix::Identity(dim, dim);
  for (auto _ : state) {
    const CholFactor f = cholesky(A);
    benchmark::DoNotOptimize(inverse_factor(f));
  }
}
BENCHMARK(BM_CholeskyInverseFactor)->Arg(23)->Arg(83);

}  // namespace
