/* Micro-benchmarks for the training hot path at production scale: one forward
 * integration, one sensitivity accumulation, the closed-form disturbance
 * solve, the kernel projection, and a full inner-loop iteration.  */

#include <benchmark/benchmark.h>

#include "rnode/adversary.hpp"
#include "rnode/harness.hpp"
#include "rnode/projector.hpp"
#include "rnode/rng.hpp"
#include "rnode/sensitivity.hpp"
#include "rnode/trainer.hpp"

using namespace rnode;

namespace {

const ModelConfig& model() {
  static const ModelConfig cfg;
  return cfg;
}

const ControlSignal& control() {
  static const ControlSignal u = ControlSignal::random(model(), 0.6, 2024);
  return u;
}

const std::vector<LabeledPoint>& points() {
  static const std::vector<LabeledPoint> data = generate_dataset({8, 77, 0.5, 1.0});
  return data;
}

}  // namespace

static void BM_Integrate(benchmark::State& state) {
  const Eigen::Vector2d x0(0.3, -0.4);
  for (auto _ : state) {
    const Trajectory traj = integrate(control(), x0, model());
    benchmark::DoNotOptimize(traj.states.data());
  }
}
BENCHMARK(BM_Integrate);

static void BM_ComputeSensitivity(benchmark::State& state) {
  const Eigen::Vector2d x0(0.3, -0.4);
  for (auto _ : state) {
    const SensitivityMatrix S = compute_sensitivity(control(), x0, model());
    benchmark::DoNotOptimize(S.matrix().data());
  }
}
BENCHMARK(BM_ComputeSensitivity);

static void BM_WorstCase(benchmark::State& state) {
  const Eigen::Vector2d x0(0.3, -0.4);
  const SensitivityMatrix S = compute_sensitivity(control(), x0, model());
  AdversaryConfig acfg;
  acfg.penalty_weight = std::max(acfg.penalty_weight, 1.1 * spectral_norm_sq(S));
  const Eigen::VectorXd r = Eigen::VectorXd::Constant(1, 0.85);
  for (auto _ : state) {
    const Disturbance eps = worst_case_disturbance(S, r, acfg);
    benchmark::DoNotOptimize(eps.values().data());
  }
}
BENCHMARK(BM_WorstCase);

static void BM_Projection(benchmark::State& state) {
  const int constraints = static_cast<int>(state.range(0));
  ConstraintStack stack;
  stack.refresh(control(),
                std::span<const LabeledPoint>(points().data(),
                                              static_cast<std::size_t>(constraints)),
                model());
  Rng rng(5);
  Eigen::VectorXd g(static_cast<Eigen::Index>(model().num_steps) * model().control_dim());
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.uniform(-1, 1);
  for (auto _ : state) {
    const Eigen::VectorXd d = stack.project_to_kernel(g);
    benchmark::DoNotOptimize(d.data());
  }
}
BENCHMARK(BM_Projection)->Arg(1)->Arg(4)->Arg(8);

static void BM_ConstraintRefresh(benchmark::State& state) {
  const int constraints = static_cast<int>(state.range(0));
  ConstraintStack stack;
  const std::span<const LabeledPoint> mem(points().data(),
                                          static_cast<std::size_t>(constraints));
  for (auto _ : state) {
    stack.refresh(control(), mem, model());
    benchmark::DoNotOptimize(stack.rows().data());
  }
}
BENCHMARK(BM_ConstraintRefresh)->Arg(1)->Arg(4)->Arg(8);

static void BM_InnerLoopIteration(benchmark::State& state) {
  // one full training on a fresh two-point task per outer iteration; the
  // reported unit is one recorded inner-loop step
  const std::vector<LabeledPoint> data{points()[0], points()[1]};
  TrainConfig tcfg;
  tcfg.seed = 11;
  tcfg.max_inner_iters = 60;
  std::size_t steps = 0;
  for (auto _ : state) {
    const TrainState st = train_robust(data, model(), tcfg);
    steps += st.history.size();
    benchmark::DoNotOptimize(st.u.values().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(steps));
}
BENCHMARK(BM_InnerLoopIteration)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
