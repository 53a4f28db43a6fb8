#include <benchmark/benchmark.h>

#include <random>

#include "aadj/densela.hpp"
#include "aadj/fem2d.hpp"
#include "aadj/quadprog.hpp"
#include "aadj/shapeopt.hpp"

using namespace aadj;

namespace {

SymMatrix random_sym(std::size_t d, std::uint64_t seed, double shift) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::vector<double> m(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) m[i * d + j] = m[j * d + i] = n(rng);
  for (std::size_t i = 0; i < d; ++i) m[i * d + i] += shift;
  return SymMatrix(d, m);
}

const shape::ShapeScenario& scenario() {
  static const shape::ShapeScenario s = shape::square_basic();
  return s;
}

}  // namespace

static void BM_SymEigen(benchmark::State& state) {
  const SymMatrix s = random_sym(static_cast<std::size_t>(state.range(0)), 1, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(sym_eigen(s));
}
BENCHMARK(BM_SymEigen)->Arg(2)->Arg(4)->Arg(16);

static void BM_GenEigen(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const SymMatrix q = random_sym(d, 2, 0.0);
  const SymMatrix a = random_sym(d, 3, 3.0 * static_cast<double>(d));
  for (auto _ : state) benchmark::DoNotOptimize(gen_eigen_pd(q, a));
}
BENCHMARK(BM_GenEigen)->Arg(2)->Arg(4)->Arg(16);

static void BM_QuadValue(benchmark::State& state) {
  const quad::MatrixPath p = quad::counterexample_path();
  for (auto _ : state) benchmark::DoNotOptimize(quad::value(p, 0.1));
}
BENCHMARK(BM_QuadValue);

static void BM_Assembly(benchmark::State& state) {
  const fem::TriMesh mesh = fem::unit_square_mesh(static_cast<int>(state.range(0)));
  const fem::ElementCoeffs c = fem::ElementCoeffs::identity(mesh);
  for (auto _ : state) benchmark::DoNotOptimize(fem::assemble_stiffness(mesh, c));
}
BENCHMARK(BM_Assembly)->Arg(32);

static void BM_Newton(benchmark::State& state) {
  const fem::TriMesh mesh = fem::unit_square_mesh(static_cast<int>(state.range(0)));
  const fem::ElementCoeffs c = fem::ElementCoeffs::identity(mesh);
  const Vector f(mesh.num_vertices(), 1.0);
  const fem::Nonlinearity& rho = fem::nonlinearity("monotone-sine");
  for (auto _ : state) {
    benchmark::DoNotOptimize(fem::newton_semilinear(mesh, c, f, fem::P1Field::zeros(mesh), rho));
  }
}
BENCHMARK(BM_Newton)->Arg(32);

static void BM_InnerMinimize(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(shape::inner_minimize(scenario(), 0.02));
}
BENCHMARK(BM_InnerMinimize)->Unit(benchmark::kMillisecond);

static void BM_ShapeDerivative(benchmark::State& state) {
  const shape::InnerSolution ref = shape::inner_minimize(scenario(), 0.0);
  const fem::P1Field p = shape::adjoint0(scenario(), ref.u);
  for (auto _ : state) benchmark::DoNotOptimize(shape::shape_derivative(scenario(), ref.u, p));
}
BENCHMARK(BM_ShapeDerivative);
BENCHMARK_MAIN();
