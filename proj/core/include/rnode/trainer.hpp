#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rnode/adversary.hpp"
#include "rnode/model.hpp"
#include "rnode/projector.hpp"

namespace rnode {

struct TrainConfig {
  AdversaryConfig adversary;

  // Damping on the per-iteration line-search step (1 = exact minimizer of the
  // linearized fit along the search direction); backtracking halves from there.
  double learning_rate = 1.0;
  double lr_decay = 0.5;       // backtracking shrink factor
  double weight_decay = 0.0;   // coefficient on |u|^2 in the full-batch objective
  double inner_tol = 1e-4;     // memorization gate on the clean per-sample cost
  double robust_tol = 1e-2;    // convergence target on the cost under the worst case
  int max_inner_iters = 1500;
  int max_outer_passes = 30;   // repair re-entries allowed after each addition
  int max_standard_iters = 5000;
  int max_backtracks = 25;
  std::uint64_t seed = 0;
  double init_scale = 0.1;     // amplitude of the random initial control
  // Presentation order for sequential training: "given" walks the dataset in
  // file order, "shuffle" applies one seeded permutation up front, "easiest"
  // greedily picks the cheapest unlearned point each round — the minimum-norm
  // curriculum, which keeps the control small and the flow unsaturated.
  std::string point_order = "given";
  bool abort_on_failure = false;  // stop at the first unlearnable point if true

  void validate() const;
};

// One row per inner iteration; costs are measured at iteration entry and
// alpha is the accepted step size (0 for the converging entry).
struct HistoryRecord {
  int outer_index;   // dataset index of the point being learned; -1 for batch
  int inner_iter;
  double cost_new_point;        // clean cost of the point being learned
  double robust_cost;           // penalized objective under the worst case
  double max_drift_memorized;   // worst clean cost among memorized points
  double grad_norm;             // norm of the kernel-projected direction
  double alpha;
};

struct FailureRecord {
  int point_index;
  double final_cost;
  int inner_iters;
};

struct TrainState {
  ControlSignal u;
  std::vector<int> memorized;  // dataset indices, in learning order
  ConstraintStack stack;
  std::vector<HistoryRecord> history;
  std::vector<FailureRecord> failures;
};

// squared prediction error of one sample at the unperturbed control
double per_sample_cost(const ControlSignal& u, const LabeledPoint& pt,
                       const ModelConfig& cfg);

// its exact gradient with respect to the flattened control: 2 S^T r
Eigen::VectorXd per_sample_gradient(const ControlSignal& u, const LabeledPoint& pt,
                                    const ModelConfig& cfg);

TrainState make_initial_state(const ModelConfig& mcfg, const TrainConfig& tcfg);

/* Learn data[new_index] without unlearning the memorized points.  Each
 * iteration: refresh the constraint stack at the current control, compute
 * the worst-case disturbance for the new point, take the per-sample gradient
 * at the disturbed control, project it onto the constraints' kernel, and
 * step with backtracking keyed on the disturbed cost.  Converges when the
 * clean cost is within inner_tol and the disturbed cost within robust_tol.
 * Returns true (and appends to memorized) iff the clean cost ends within
 * inner_tol; otherwise records a failure.  */
bool inner_loop(TrainState& state, const std::vector<LabeledPoint>& data,
                int new_index, const ModelConfig& mcfg, const TrainConfig& tcfg);

/* Sequentially introduce every point through inner_loop.  After each
 * addition, points whose clean cost drifted above inner_tol are re-entered
 * as "new" (repair), up to max_outer_passes sweeps.  */
TrainState train_robust(const std::vector<LabeledPoint>& data, const ModelConfig& mcfg,
                        const TrainConfig& tcfg);

/* Baseline: full-batch gradient descent on the summed per-sample cost (plus
 * weight_decay times the squared control norm) with backtracking; no
 * disturbance, no projection.  Stops when every per-sample cost is within
 * inner_tol, on a long no-progress stall, or at max_standard_iters.
 * warm_start, when given, replaces the random initial control — used to
 * continue a run under a different configuration (e.g. decay annealing).  */
TrainState train_standard(const std::vector<LabeledPoint>& data, const ModelConfig& mcfg,
                          const TrainConfig& tcfg,
                          const ControlSignal* warm_start = nullptr);

void write_history_csv(const std::vector<HistoryRecord>& history,
                       const std::filesystem::path& path);

/* Control checkpoint plus a JSON metadata sidecar at "<path>.meta.json"
 * carrying the mode, seed, memorized indices and config snapshot.  */
void save_train_checkpoint(const TrainState& state, const ModelConfig& mcfg,
                           const TrainConfig& tcfg, const std::string& mode,
                           const std::filesystem::path& path);

struct TrainCheckpoint {
  ControlSignal u;
  double dt;
  std::string mode;  // "robust", "standard", or "unknown" without a sidecar
  std::uint64_t seed = 0;
  std::vector<int> memorized;
  // Full model geometry recovered from the sidecar, when present.  Callers
  // that evaluate a checkpoint should prefer this over reconstructing the
  // configuration from defaults.
  std::optional<ModelConfig> model;
};

TrainCheckpoint load_train_checkpoint(const std::filesystem::path& path);

}  // namespace rnode
