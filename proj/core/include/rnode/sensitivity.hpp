#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rnode/model.hpp"

namespace rnode {

/* Per-step linearization of f(x, W, b) = tanh(Wx + b) along a trajectory.
 * With s = tanh(W x_k + b) and D = diag(1 - s^2):
 *   A = D W                  (n x n,  d f / d x)
 *   B = [ d f / d vec(W) | d f / d b ]   (n x p), column i*n+j = D e_i x_j,
 *                                        column n*n+i = D e_i            */
struct StepJacobians {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};

std::vector<StepJacobians> jacobians_along(const ControlSignal& u,
                                           const Trajectory& traj,
                                           const ModelConfig& cfg);

/* Exact Jacobian of the discrete end-point map u -> readout(x_N) with respect
 * to the flattened control grid.  Shape output_dim x (control_dim*num_steps);
 * column block k (slots [k*p, (k+1)*p)) is dt * c_{k+1} B_k where the adjoint
 * rows satisfy c_N = readout_matrix and c_k = c_{k+1} (I + dt A_k).  Row rank
 * is therefore at most output_dim.  */
class SensitivityMatrix {
 public:
  SensitivityMatrix(Eigen::MatrixXd m, double dt, int num_steps, int control_dim,
                    std::uint64_t base_hash = 0);

  const Eigen::MatrixXd& matrix() const { return m_; }
  double dt() const { return dt_; }
  int num_steps() const { return num_steps_; }
  int control_dim() const { return control_dim_; }
  // fingerprint of the (u, x0) pair this linearization was taken at
  std::uint64_t base_hash() const { return base_hash_; }

 private:
  Eigen::MatrixXd m_;
  double dt_;
  int num_steps_;
  int control_dim_;
  std::uint64_t base_hash_;
};

/* Integrates from x0 (input_dim entries) and accumulates the sensitivity.
 * Pure function of its arguments; safe to call concurrently.  */
SensitivityMatrix compute_sensitivity(const ControlSignal& u, const Eigen::VectorXd& x0,
                                      const ModelConfig& cfg);

}  // namespace rnode
