#pragma once

#include <Eigen/Dense>

#include "rnode/model.hpp"
#include "rnode/sensitivity.hpp"

namespace rnode {

/* Additive control disturbance on the same grid as the control signal,
 * bounded in the entrywise sup norm by its budget radius.  */
class Disturbance {
 public:
  Disturbance(Eigen::MatrixXd values, double radius);

  static Disturbance zero(int num_steps, int control_dim, double radius);

  const Eigen::MatrixXd& values() const { return values_; }
  double radius() const { return radius_; }
  double inf_norm() const { return values_.cwiseAbs().maxCoeff(); }
  bool is_zero() const { return (values_.array() == 0.0).all(); }
  Eigen::VectorXd to_vector() const { return grid_to_vector(values_); }

  // squared L2 norm of the piecewise-constant signal: dt * sum of squares
  double l2_sq(double dt) const { return dt * values_.squaredNorm(); }

 private:
  Eigen::MatrixXd values_;
  double radius_;
};

struct AdversaryConfig {
  double penalty_weight = 0.2;   // coefficient on the disturbance-size penalty
  double radius = 0.1;           // sup-norm budget of the disturbance
  double zero_threshold = 1e-10; // below this sup norm the direction counts as zero

  void validate() const;
};

// prediction minus target at the unperturbed control
Eigen::VectorXd residual(const ControlSignal& u, const LabeledPoint& pt,
                         const ModelConfig& cfg);

// prediction when the control is shifted by the disturbance
Eigen::VectorXd perturbed_predict(const ControlSignal& u, const Disturbance& eps,
                                  const Eigen::VectorXd& x0, const ModelConfig& cfg);

// largest eigenvalue of S S^T (squared spectral norm of the sensitivity)
double spectral_norm_sq(const SensitivityMatrix& S);

/* Closed-form worst case of the linearized objective
 *     |r + S e|^2 - penalty_weight * |e|^2
 * per stationarity: gamma = S^T (penalty_weight*I - S S^T)^{-1} r, solved on
 * the output_dim x output_dim system (never the full control-space one), then
 * scaled to the sup-norm budget.  Requires penalty_weight > |S|^2; throws
 * numeric_error naming the computed norm otherwise.  Returns the zero
 * disturbance when the unscaled direction is below zero_threshold.  The
 * returned point never decreases |r + S e| (checked).  */
Disturbance worst_case_disturbance(const SensitivityMatrix& S, const Eigen::VectorXd& r,
                                   const AdversaryConfig& cfg);

/* Disturbance-penalized sample objective at full nonlinearity:
 * squared prediction error under the shifted control minus
 * penalty_weight times the squared L2 size of the disturbance.  */
double robust_cost(const ControlSignal& u, const Disturbance& eps, const LabeledPoint& pt,
                   const ModelConfig& mcfg, const AdversaryConfig& acfg);

}  // namespace rnode
