#include "rnode/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "rnode/io.hpp"
#include "rnode/rng.hpp"

namespace rnode {

void TrainConfig::validate() const {
  adversary.validate();
  if (!(learning_rate > 0.0)) throw config_error("train config: learning_rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay < 1.0))
    throw config_error("train config: lr_decay must be in (0, 1)");
  if (!(inner_tol > 0.0)) throw config_error("train config: inner_tol must be positive");
  if (!(robust_tol > 0.0)) throw config_error("train config: robust_tol must be positive");
  if (max_inner_iters <= 0 || max_outer_passes <= 0 || max_standard_iters <= 0 ||
      max_backtracks <= 0)
    throw config_error("train config: iteration caps must be positive");
  if (!(init_scale >= 0.0)) throw config_error("train config: init_scale must be >= 0");
  if (!(weight_decay >= 0.0)) throw config_error("train config: weight_decay must be >= 0");
  if (point_order != "given" && point_order != "shuffle" && point_order != "easiest")
    throw config_error("train config: point_order must be given, shuffle, or easiest");
}

double per_sample_cost(const ControlSignal& u, const LabeledPoint& pt,
                       const ModelConfig& cfg) {
  return residual(u, pt, cfg).squaredNorm();
}

Eigen::VectorXd per_sample_gradient(const ControlSignal& u, const LabeledPoint& pt,
                                    const ModelConfig& cfg) {
  const SensitivityMatrix S = compute_sensitivity(u, pt.x, cfg);
  return 2.0 * S.matrix().transpose() * residual(u, pt, cfg);
}

TrainState make_initial_state(const ModelConfig& mcfg, const TrainConfig& tcfg) {
  mcfg.validate();
  tcfg.validate();
  return TrainState{ControlSignal::random(mcfg, tcfg.init_scale, tcfg.seed),
                    {}, ConstraintStack{}, {}, {}};
}

namespace {

/* Largest sup-norm move of any control entry in one trial step.  The
 * activation saturates on a scale of ~3; bounding each move well below that
 * keeps the control out of the numerically dead region where every layer's
 * activation derivative underflows and gradients vanish for good.  */
constexpr double kMaxStepSup = 1.0;

/* Largest control-space (Frobenius) move in one trial step.  Second-order
 * drift of the memorized points grows with the square of the move length, so
 * bounding the per-step move keeps each accepted step's collateral damage
 * small enough for the drift guard and repair sweeps to absorb.  */
constexpr double kMaxStepFro = 0.25;

/* Escape hatch for flat valleys: when the loop stalls far from the target, a
 * few random kernel-direction kicks (still subject to the drift guard) are
 * tried before giving up.  Scale is the kick's control-space length.  */
constexpr int kMaxKicks = 0;
constexpr double kKickScale = 1.0;

/* Break the inner loop when neither the clean cost nor the cost under the
 * worst-case disturbance has improved by this relative amount over this many
 * iterations — the run is grinding without converging and the iteration
 * budget is better spent by the repair sweeps and the retry round.  */
constexpr double kStallRelImprove = 1e-4;
constexpr int kStallWindow = 100;
constexpr int kStandardStallWindow = 2000;  // full-batch plateaus are long but cheap

/* A point whose end-point sensitivity has collapsed (squared spectral norm of
 * L below this floor) cannot be moved by any bounded control step: the flow it
 * rides is saturated everywhere that matters.  Iterating anyway only pumps
 * capped-length junk steps into the control, so the loop gives up immediately
 * and leaves the point to the retry round, when the flow has changed.  */
constexpr double kSensitivityFloor = 1e-9;

/* Kernel steps preserve memorized outputs only to first order, so a trial
 * step is additionally rejected when it grows any memorized point's clean
 * cost by more than a bounded increment over its value at iteration entry.
 * An additive increment (rather than an absolute cap) means progress is never
 * frozen outright: far from the target the increment widens a little so the
 * run can traverse, near convergence it narrows, and the repair sweeps
 * between additions polish away whatever drift accumulated.  Units: tol.  */
constexpr double kDriftIncFloor = 0.5;
constexpr double kDriftIncCeil = 2.0;
constexpr double kDriftFrac = 0.01;

/* A memorized point whose repair stalls above tol but within this multiple of
 * it stays in the constraint stack — still protected, still repairable later
 * — instead of losing its guard entirely.  */
constexpr double kKeepGuardFactor = 10.0;

double max_memorized_cost(const TrainState& st, const std::vector<LabeledPoint>& data,
                          const ModelConfig& mcfg) {
  double worst = 0.0;
  for (int i : st.memorized)
    worst = std::max(worst, per_sample_cost(st.u, data[static_cast<std::size_t>(i)], mcfg));
  return worst;
}

// clean cost, worst-case disturbance and the cost under it, all at control u
struct ProbedPoint {
  double cost_clean;
  double cost_disturbed;
  double robust_objective;
  double sens_sq;         // squared spectral norm of the sensitivity at u
  Disturbance eps;
  Eigen::MatrixXd S;      // sensitivity at u (kept: gradient source when fit binds)
  Eigen::VectorXd r;      // residual at u
};

ProbedPoint probe_point(const ControlSignal& u, const LabeledPoint& pt,
                        const ModelConfig& mcfg, const AdversaryConfig& acfg) {
  SensitivityMatrix S = compute_sensitivity(u, pt.x, mcfg);
  Eigen::VectorXd r = residual(u, pt, mcfg);
  /* Keep the inner maximization well-posed along the whole trajectory:
   * mid-training the control can pass through high-sensitivity regions where
   * the configured penalty would leave it unbounded.  The lift engages only
   * there; near convergence sensitivities are small and the configured value
   * applies exactly, so the convergence gates keep their meaning.  */
  const double sens_sq = spectral_norm_sq(S);
  AdversaryConfig acfg_eff = acfg;
  acfg_eff.penalty_weight = std::max(acfg.penalty_weight, 1.1 * sens_sq);
  Disturbance eps = worst_case_disturbance(S, r, acfg_eff);
  const Eigen::VectorXd rp = perturbed_predict(u, eps, pt.x, mcfg) - pt.y;
  const double cost_disturbed = rp.squaredNorm();
  return ProbedPoint{r.squaredNorm(), cost_disturbed,
                     cost_disturbed - acfg_eff.penalty_weight * eps.l2_sq(mcfg.dt),
                     sens_sq, std::move(eps), S.matrix(), std::move(r)};
}

/* Acceptance measure for line search and stall detection: the larger of the
 * two convergence gates, each in units of its own tolerance.  Descending this
 * (rather than the disturbed cost alone) matters in the saturated regime,
 * where the flattest control is NOT the best-fitting one: a step that trades
 * a little flatness for fit must be acceptable while the fit gate is the
 * binding one, or the loop parks at a flat non-memorizing optimum.  */
double gate_measure(const ProbedPoint& p, const TrainConfig& tcfg) {
  return std::max(p.cost_clean / tcfg.inner_tol, p.cost_disturbed / tcfg.robust_tol);
}

}  // namespace

bool inner_loop(TrainState& st, const std::vector<LabeledPoint>& data, int new_index,
                const ModelConfig& mcfg, const TrainConfig& tcfg) {
  mcfg.validate();
  tcfg.validate();
  if (new_index < 0 || new_index >= static_cast<int>(data.size()))
    throw config_error("inner loop: point index " + std::to_string(new_index) +
                       " outside dataset of size " + std::to_string(data.size()));
  const LabeledPoint& pt = data[static_cast<std::size_t>(new_index)];

  std::vector<LabeledPoint> constraints;
  constraints.reserve(st.memorized.size());
  for (int i : st.memorized) constraints.push_back(data[static_cast<std::size_t>(i)]);

  bool converged = false;
  double converged_cost = 0.0;
  double move_prev = 0.0;  // control-space length of the last accepted step
  double best_measure = std::numeric_limits<double>::infinity();
  int last_improve_iter = 0;
  int kicks_used = 0;
  int iter = 0;
  for (; iter < tcfg.max_inner_iters; ++iter) {
    st.stack.refresh(st.u, constraints, mcfg);
    const ProbedPoint at_u = probe_point(st.u, pt, mcfg, tcfg.adversary);

    /* descent direction: gradient of whichever convergence gate currently
     * binds, projected onto the kernel of the memorized points'
     * sensitivities.  When the worst-case gate binds, the gradient is taken
     * at the disturbed control; when the fit gate binds, at the control
     * itself.  Following the binding gate matters near saturation, where the
     * flattest control is not the best-fitting one: descending the
     * worst-case cost alone parks at flat optima that never memorize.  */
    const bool fit_binds =
        at_u.cost_clean / tcfg.inner_tol >= at_u.cost_disturbed / tcfg.robust_tol;
    Eigen::MatrixXd S_act;
    Eigen::VectorXd r_act;
    if (fit_binds) {
      S_act = at_u.S;
      r_act = at_u.r;
    } else {
      const ControlSignal u_dist = st.u.shifted(at_u.eps.values());
      S_act = compute_sensitivity(u_dist, pt.x, mcfg).matrix();
      r_act = residual(u_dist, pt, mcfg);
    }
    const Eigen::VectorXd d =
        st.stack.project_to_kernel(2.0 * S_act.transpose() * r_act);
    const double dir_norm = d.norm();
    const double drift = max_memorized_cost(st, data, mcfg);

    if (at_u.cost_clean <= tcfg.inner_tol && at_u.cost_disturbed <= tcfg.robust_tol) {
      st.history.push_back({new_index, iter, at_u.cost_clean, at_u.robust_objective,
                            drift, dir_norm, 0.0});
      converged = true;
      converged_cost = at_u.cost_clean;
      break;
    }
    /* Relative stall test: a healthy direction scales with the residual, so a
     * norm this far below it means the constraints (or saturation) have
     * annihilated every useful first-order move.  */
    if (dir_norm <= 1e-10 * (1.0 + std::sqrt(at_u.cost_clean))) {
      st.history.push_back({new_index, iter, at_u.cost_clean, at_u.robust_objective,
                            drift, dir_norm, 0.0});
      break;
    }
    if (at_u.sens_sq < kSensitivityFloor) {
      st.history.push_back({new_index, iter, at_u.cost_clean, at_u.robust_objective,
                            drift, dir_norm, 0.0});
      break;
    }
    const double measure = gate_measure(at_u, tcfg);
    if (measure < best_measure * (1.0 - kStallRelImprove)) {
      best_measure = measure;
      last_improve_iter = iter;
    } else if (iter - last_improve_iter >= kStallWindow) {
      /* Grinding without progress.  Far from the target this is usually a
       * flat valley of the saturated flow rather than a true optimum, so
       * before giving up, try to hop out along a random kernel direction
       * that the memorized points can tolerate.  */
      bool kicked = false;
      if (at_u.cost_clean > 0.5 && kicks_used < kMaxKicks) {
        Rng kick_rng(mix_seed(tcfg.seed ^ 0x6b69636bULL, static_cast<std::uint64_t>(new_index),
                              static_cast<std::uint64_t>(iter)));
        Eigen::VectorXd noise(static_cast<Eigen::Index>(st.u.num_steps()) *
                              st.u.control_dim());
        for (int attempt = 0; attempt < 8 && !kicked; ++attempt) {
          for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = kick_rng.uniform(-1, 1);
          Eigen::VectorXd v = st.stack.project_to_kernel(noise);
          const double vn = v.norm();
          if (vn <= 1e-12) break;
          v *= (kKickScale / (1 << attempt)) / vn;
          ControlSignal u_kick =
              st.u.shifted(vector_to_grid(v, st.u.num_steps(), st.u.control_dim()));
          double kick_drift = 0.0;
          for (const LabeledPoint& c : constraints)
            kick_drift = std::max(kick_drift, per_sample_cost(u_kick, c, mcfg));
          if (kick_drift <= drift + 4.0 * kDriftIncCeil * tcfg.inner_tol) {
            st.u = std::move(u_kick);
            move_prev = 0.0;  // fresh landscape; let the next step re-derive its scale
            kicked = true;
          }
        }
      }
      if (kicked) {
        ++kicks_used;
        last_improve_iter = iter;
        best_measure = std::numeric_limits<double>::infinity();
        continue;
      }
      st.history.push_back({new_index, iter, at_u.cost_clean, at_u.robust_objective,
                            drift, dir_norm, 0.0});
      break;
    }

    /* Initial trial step: exact line-search minimizer of the linearized fit
     * term along d (the curvature scale 1/‖L·d‖² moves by orders of magnitude
     * as the flow saturates, so no constant step suits the whole run).  A
     * sup-norm trust region keeps near-annihilated directions from producing
     * astronomical steps; backtracking below handles the nonlinearity.  */
    const Eigen::VectorXd Ld = S_act * d;
    const double ld_sq = Ld.squaredNorm();
    if (ld_sq <= 0.0) {  // direction carries no first-order effect
      st.history.push_back({new_index, iter, at_u.cost_clean, at_u.robust_objective,
                            drift, dir_norm, 0.0});
      break;
    }
    const Eigen::MatrixXd step = vector_to_grid(d, st.u.num_steps(), st.u.control_dim());
    const double gn_step = r_act.dot(Ld) / ld_sq;
    const double sup_cap = kMaxStepSup / step.cwiseAbs().maxCoeff();
    const double fro_cap = kMaxStepFro / dir_norm;
    double alpha = std::min({tcfg.learning_rate * gn_step, sup_cap, fro_cap});
    /* Warm start: when the drift guard (not the objective) is what limits the
     * step, the feasible move length changes slowly between iterations, so
     * starting near the last accepted length saves most of the backtracks.  */
    if (move_prev > 0.0) alpha = std::min(alpha, 4.0 * move_prev / dir_norm);
    bool accepted = false;
    const double drift_inc =
        tcfg.inner_tol * std::clamp(kDriftFrac * at_u.cost_clean / tcfg.inner_tol,
                                    kDriftIncFloor, kDriftIncCeil);
    const double drift_allowance = drift + drift_inc;
    for (int bt = 0; bt < tcfg.max_backtracks; ++bt) {
      ControlSignal u_trial = st.u.shifted(-alpha * step);
      double trial_measure;
      try {
        trial_measure = gate_measure(probe_point(u_trial, pt, mcfg, tcfg.adversary), tcfg);
      } catch (const numeric_error&) {
        alpha *= tcfg.lr_decay;  // infeasible trial counts as a rejected step
        continue;
      }
      double trial_drift = 0.0;
      for (const LabeledPoint& c : constraints)
        trial_drift = std::max(trial_drift, per_sample_cost(u_trial, c, mcfg));
      /* Strict decrease: on numerically flat plateaus (fully saturated flow)
       * many directions tie exactly, and accepting ties random-walks the
       * control outward into dead territory.  */
      if (trial_measure < measure && trial_drift <= drift_allowance) {
        st.u = std::move(u_trial);
        accepted = true;
        move_prev = alpha * dir_norm;
        st.history.push_back({new_index, iter, at_u.cost_clean, at_u.robust_objective,
                              drift, dir_norm, alpha});
        break;
      }
      alpha *= tcfg.lr_decay;
    }
    if (!accepted) {  // stalled: no step size made progress
      st.history.push_back({new_index, iter, at_u.cost_clean, at_u.robust_objective,
                            drift, dir_norm, 0.0});
      break;
    }
  }

  const double final_clean = converged ? converged_cost : per_sample_cost(st.u, pt, mcfg);
  if (final_clean <= tcfg.inner_tol) {
    st.memorized.push_back(new_index);
    return true;
  }
  st.failures.push_back({new_index, final_clean, iter});
  return false;
}

namespace {

/* Re-enter memorized points whose clean cost drifted above the gate, worst
 * first, so the memorization contract holds after each addition and not only
 * at the end of the run.  A repair that stalls close to the gate keeps its
 * point in the stack (still guarded, still repairable after the next
 * addition); one that stalls far out gives the point up for this round.  */
void repair_sweep(TrainState& st, const std::vector<LabeledPoint>& data,
                  const ModelConfig& mcfg, const TrainConfig& tcfg) {
  std::vector<int> given_up;
  for (int pass = 0; pass < tcfg.max_outer_passes; ++pass) {
    int worst_pos = -1;
    double worst_cost = tcfg.inner_tol;
    for (std::size_t m = 0; m < st.memorized.size(); ++m) {
      const int idx = st.memorized[m];
      if (std::find(given_up.begin(), given_up.end(), idx) != given_up.end()) continue;
      const double c = per_sample_cost(st.u, data[static_cast<std::size_t>(idx)], mcfg);
      if (c > worst_cost) {
        worst_cost = c;
        worst_pos = static_cast<int>(m);
      }
    }
    if (worst_pos < 0) break;
    const int repair_idx = st.memorized[static_cast<std::size_t>(worst_pos)];
    st.memorized.erase(st.memorized.begin() + worst_pos);
    if (!inner_loop(st, data, repair_idx, mcfg, tcfg)) {
      given_up.push_back(repair_idx);
      const double c = per_sample_cost(st.u, data[static_cast<std::size_t>(repair_idx)], mcfg);
      if (c <= kKeepGuardFactor * tcfg.inner_tol) st.memorized.push_back(repair_idx);
    }
  }
}

}  // namespace

TrainState train_robust(const std::vector<LabeledPoint>& data, const ModelConfig& mcfg,
                        const TrainConfig& tcfg) {
  mcfg.validate();
  tcfg.validate();
  if (data.empty()) throw config_error("train: dataset is empty");
  TrainState st = make_initial_state(mcfg, tcfg);

  std::vector<int> pending(data.size());
  std::iota(pending.begin(), pending.end(), 0);
  if (tcfg.point_order == "shuffle") {
    Rng rng(mix_seed(tcfg.seed, 0x0d5f));
    for (std::size_t i = pending.size(); i > 1; --i)
      std::swap(pending[i - 1], pending[rng.next() % i]);
  }
  const bool easiest_first = tcfg.point_order == "easiest";

  while (!pending.empty()) {
    std::size_t pick = 0;
    if (easiest_first) {
      // cheapest unlearned point at the current control: the smallest next
      // step, hence the least new control norm and the least drift inflicted
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < pending.size(); ++k) {
        const double c =
            per_sample_cost(st.u, data[static_cast<std::size_t>(pending[k])], mcfg);
        if (c < best) {
          best = c;
          pick = k;
        }
      }
    }
    const int idx = pending[pick];
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));
    const bool ok = inner_loop(st, data, idx, mcfg, tcfg);
    if (!ok && tcfg.abort_on_failure) return st;
    repair_sweep(st, data, mcfg, tcfg);
  }

  /* Retry rounds for points that failed on first presentation: the flow has
   * matured since, and a previously unlearnable point often enters with a
   * small residual now.  Rounds repeat while they convert at least one point,
   * bounded to keep the worst case finite.  */
  for (int round = 0; round < 3; ++round) {
    std::vector<int> failed;
    for (const FailureRecord& f : st.failures)
      if (std::find(st.memorized.begin(), st.memorized.end(), f.point_index) ==
              st.memorized.end() &&
          std::find(failed.begin(), failed.end(), f.point_index) == failed.end())
        failed.push_back(f.point_index);
    if (failed.empty()) break;
    bool progressed = false;
    for (int idx : failed) {
      const bool ok = inner_loop(st, data, idx, mcfg, tcfg);
      if (!ok && tcfg.abort_on_failure) return st;
      if (ok) progressed = true;
      repair_sweep(st, data, mcfg, tcfg);
    }
    if (!progressed) break;
  }
  return st;
}

TrainState train_standard(const std::vector<LabeledPoint>& data, const ModelConfig& mcfg,
                          const TrainConfig& tcfg, const ControlSignal* warm_start) {
  mcfg.validate();
  tcfg.validate();
  if (data.empty()) throw config_error("train: dataset is empty");
  TrainState st = make_initial_state(mcfg, tcfg);
  if (warm_start != nullptr) {
    if (warm_start->num_steps() != st.u.num_steps() ||
        warm_start->control_dim() != st.u.control_dim())
      throw config_error("train: warm start control has grid " +
                         std::to_string(warm_start->num_steps()) + "x" +
                         std::to_string(warm_start->control_dim()) + ", model needs " +
                         std::to_string(st.u.num_steps()) + "x" +
                         std::to_string(st.u.control_dim()));
    st.u = *warm_start;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();

  /* Full-batch objective: summed per-sample fit plus a control-size term.
   * The size term is what makes the learned classifier a smooth region
   * rather than one narrow tube per training point: with targets at the
   * saturation limit of the readout, the unregularized fit keeps improving
   * forever by inflating the control, destroying both generalization and
   * sensitivity to disturbances along the way.  */
  const auto objective = [&](const ControlSignal& u, double& worst_out) {
    double total = 0.0;
    worst_out = 0.0;
    for (const LabeledPoint& pt : data) {
      const double c = per_sample_cost(u, pt, mcfg);
      total += c;
      worst_out = std::max(worst_out, c);
    }
    return total + tcfg.weight_decay * u.values().squaredNorm();
  };

  double best_total = std::numeric_limits<double>::infinity();
  int last_improve_iter = 0;
  for (int iter = 0; iter < tcfg.max_standard_iters; ++iter) {
    double worst = 0.0;
    const double total = objective(st.u, worst);
    if (worst <= tcfg.inner_tol) {
      st.history.push_back({-1, iter, total, nan, worst, 0.0, 0.0});
      break;
    }
    /* Stall break: once full-batch descent stops making relative progress the
     * fit has converged for practical purposes, and grinding further only
     * inflates the control norm (and with it, saturation) without improving
     * the classifier.  The window is long: gradient descent on this landscape
     * crosses wide plateaus (the minority class fits long after the bulk).  */
    if (total < best_total * (1.0 - kStallRelImprove)) {
      best_total = total;
      last_improve_iter = iter;
    } else if (iter - last_improve_iter >= kStandardStallWindow) {
      st.history.push_back({-1, iter, total, nan, worst, 0.0, 0.0});
      break;
    }

    Eigen::VectorXd g = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(st.u.num_steps()) * st.u.control_dim());
    for (const LabeledPoint& pt : data) {
      const SensitivityMatrix S = compute_sensitivity(st.u, pt.x, mcfg);
      g += 2.0 * S.matrix().transpose() * residual(st.u, pt, mcfg);
    }
    g += 2.0 * tcfg.weight_decay * grid_to_vector(st.u.values());
    const Eigen::MatrixXd step = vector_to_grid(g, st.u.num_steps(), st.u.control_dim());

    /* Plain gradient step with a fixed rate, backtracked on failure.  Unlike
     * the per-point loop, the full-batch objective is descended directly:
     * curvature-scaled steps here chase individual residuals to machine
     * precision and inflate the control norm, trading away both smoothness
     * of the learned classifier and sensitivity to disturbances.  */
    const double gnorm = g.norm();
    if (gnorm <= 0.0) {
      st.history.push_back({-1, iter, total, nan, worst, gnorm, 0.0});
      break;
    }
    const double sup_cap = kMaxStepSup / step.cwiseAbs().maxCoeff();
    const double fro_cap = kMaxStepFro / gnorm;
    double alpha = std::min({tcfg.learning_rate, sup_cap, fro_cap});
    bool accepted = false;
    for (int bt = 0; bt < tcfg.max_backtracks; ++bt) {
      ControlSignal u_trial = st.u.shifted(-alpha * step);
      double trial_worst = 0.0;
      const double trial_total = objective(u_trial, trial_worst);
      /* Strict decrease: accepting ties lets fully-saturated plateaus random-
       * walk the control outward into dead territory.  */
      if (trial_total < total) {
        st.u = std::move(u_trial);
        accepted = true;
        break;
      }
      alpha *= tcfg.lr_decay;
    }
    st.history.push_back({-1, iter, total, nan, worst, g.norm(), accepted ? alpha : 0.0});
    if (!accepted) break;
  }

  for (std::size_t i = 0; i < data.size(); ++i)
    if (per_sample_cost(st.u, data[i], mcfg) <= tcfg.inner_tol)
      st.memorized.push_back(static_cast<int>(i));
  return st;
}

void write_history_csv(const std::vector<HistoryRecord>& history,
                       const std::filesystem::path& path) {
  std::string out = "j,k,cost_new_point,robust_cost,max_drift_memorized,grad_norm,alpha\n";
  for (const HistoryRecord& h : history) {
    out += std::to_string(h.outer_index) + ',' + std::to_string(h.inner_iter) + ',' +
           format_double(h.cost_new_point) + ',' + format_double(h.robust_cost) + ',' +
           format_double(h.max_drift_memorized) + ',' + format_double(h.grad_norm) +
           ',' + format_double(h.alpha) + '\n';
  }
  write_file_atomic(path, out);
}

void save_train_checkpoint(const TrainState& state, const ModelConfig& mcfg,
                           const TrainConfig& tcfg, const std::string& mode,
                           const std::filesystem::path& path) {
  save_control(state.u, mcfg.dt, path);
  nlohmann::json meta;
  meta["mode"] = mode;
  meta["seed"] = tcfg.seed;
  meta["memorized"] = state.memorized;
  meta["model"] = {{"state_dim", mcfg.state_dim},       {"input_dim", mcfg.input_dim},
                   {"output_dim", mcfg.output_dim},     {"num_steps", mcfg.num_steps},
                   {"dt", mcfg.dt},                     {"readout_index", mcfg.readout_index}};
  meta["train"] = {{"penalty_weight", tcfg.adversary.penalty_weight},
                   {"radius", tcfg.adversary.radius},
                   {"zero_threshold", tcfg.adversary.zero_threshold},
                   {"learning_rate", tcfg.learning_rate},
                   {"lr_decay", tcfg.lr_decay},
                   {"weight_decay", tcfg.weight_decay},
                   {"inner_tol", tcfg.inner_tol},
                   {"robust_tol", tcfg.robust_tol},
                   {"max_inner_iters", tcfg.max_inner_iters},
                   {"max_outer_passes", tcfg.max_outer_passes},
                   {"max_standard_iters", tcfg.max_standard_iters},
                   {"max_backtracks", tcfg.max_backtracks},
                   {"init_scale", tcfg.init_scale},
                   {"point_order", tcfg.point_order},
                   {"abort_on_failure", tcfg.abort_on_failure}};
  std::filesystem::path meta_path = path;
  meta_path += ".meta.json";
  write_file_atomic(meta_path, meta.dump(2) + "\n");
}

TrainCheckpoint load_train_checkpoint(const std::filesystem::path& path) {
  StoredControl sc = load_control(path);
  TrainCheckpoint ck{std::move(sc.u), sc.dt, "unknown", 0, {}, std::nullopt};
  std::filesystem::path meta_path = path;
  meta_path += ".meta.json";
  if (std::filesystem::exists(meta_path)) {
    const nlohmann::json meta = nlohmann::json::parse(read_file(meta_path));
    ck.mode = meta.value("mode", "unknown");
    ck.seed = meta.value("seed", std::uint64_t{0});
    if (meta.contains("memorized"))
      ck.memorized = meta["memorized"].get<std::vector<int>>();
    if (meta.contains("model")) {
      const nlohmann::json& m = meta["model"];
      ModelConfig cfg;
      cfg.state_dim = m.value("state_dim", cfg.state_dim);
      cfg.input_dim = m.value("input_dim", cfg.input_dim);
      cfg.output_dim = m.value("output_dim", cfg.output_dim);
      cfg.num_steps = m.value("num_steps", cfg.num_steps);
      cfg.dt = m.value("dt", cfg.dt);
      cfg.readout_index = m.value("readout_index", cfg.readout_index);
      cfg.validate();
      ck.model = cfg;
    }
  }
  return ck;
}

}  // namespace rnode
