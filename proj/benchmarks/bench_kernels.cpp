#include <semigroup/estimators.hpp>
#include <semigroup/pathsim.hpp>
#include <semigroup/rng.hpp>

#include <benchmark/benchmark.h>

using namespace semigroup;

namespace {

void BM_SphereStep(benchmark::State& state) {
    const auto s = SphereModel::make(static_cast<int>(state.range(0)));
    const auto endo = weitzenbock_endomorphism(*s, EndomorphismVariant::ThetaGen);
    IntrinsicStepper st(*s, 1e-3, &endo);
    st.reset(s->base_point());
    PathRng rng(1, 0);
    Vec db;
    for (auto _ : state) {
        rng.increment(db, s->ambient_dim(), 1e-3);
        st.advance(db);
        benchmark::DoNotOptimize(st.x().data());
    }
}
BENCHMARK(BM_SphereStep)->Arg(2)->Arg(4);

void BM_ScaledDiagonalStepWithXi(benchmark::State& state) {
    const ScaledDiagonalSystem sys(0.25);
    ExtrinsicStepper st(sys, 1e-3, true, true);
    st.reset(make_vec({0.5, 0.2}));
    PathRng rng(1, 0);
    Vec db;
    for (auto _ : state) {
        rng.increment(db, 2, 1e-3);
        st.advance(db);
        benchmark::DoNotOptimize(st.xi().data());
    }
}
BENCHMARK(BM_ScaledDiagonalStepWithXi);

void BM_DivergenceFlat(benchmark::State& state) {
    const auto flat = EuclideanModel::flat(2);
    EstimatorConfig cfg;
    cfg.samples = static_cast<std::size_t>(state.range(0));
    cfg.steps = 512;
    cfg.workers = 1;
    for (auto _ : state) {
        const MCEstimate e = divergence_expectation(*flat, linear_field(identity(2)), make_vec({0.0, 0.0}), cfg);
        benchmark::DoNotOptimize(e.mean.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DivergenceFlat)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_PtvfSphere(benchmark::State& state) {
    const auto s = SphereModel::make(2);
    EstimatorConfig cfg;
    cfg.samples = 500;
    cfg.steps = 256;
    cfg.workers = 1;
    const VectorField grad_z{[](const Vec& p) { return Vec(make_vec({0.0, 0.0, 1.0}) - p(2) * p); }, {}};
    for (auto _ : state) {
        const MCEstimate e =
            ptvf_intrinsic(*s, [](const Vec& p) { return p(0) * p(2); }, grad_z, make_vec({0.6, 0.0, 0.8}), cfg);
        benchmark::DoNotOptimize(e.mean.data());
    }
}
BENCHMARK(BM_PtvfSphere)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
