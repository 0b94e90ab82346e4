#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "rnode/common.hpp"

namespace rnode {

/* The network is the explicit-Euler discretization of
 *     xdot(t) = tanh(W(t) x(t) + b(t)),   t in [0, 1],
 * i.e. a residual network with num_steps layers of width state_dim whose
 * weights vary per layer.  Inputs are lifted into the state space by zero
 * padding and the output is read off a fixed coordinate of the final state. */
struct ModelConfig {
  int state_dim = 5;
  int input_dim = 2;
  int output_dim = 1;
  int num_steps = 100;
  double dt = 0.01;
  // first state coordinate reported by the readout (output_dim consecutive)
  int readout_index = 4;

  // per-step parameter count: one state_dim x state_dim weight matrix + bias
  int control_dim() const { return state_dim * state_dim + state_dim; }

  void validate() const;  // throws config_error
};

// One labeled sample: x has input_dim entries, y has output_dim entries.
struct LabeledPoint {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

/* Piecewise-constant (zero-order-hold) parameter schedule.  Row k holds the
 * parameters applied on [k*dt, (k+1)*dt): the weight matrix in row-major
 * order followed by the bias.  */
class ControlSignal {
 public:
  explicit ControlSignal(Eigen::MatrixXd values);

  static ControlSignal zero(const ModelConfig& cfg);
  // entries uniform in [-scale, scale), deterministic in seed
  static ControlSignal random(const ModelConfig& cfg, double scale, std::uint64_t seed);

  const Eigen::MatrixXd& values() const { return values_; }
  int num_steps() const { return static_cast<int>(values_.rows()); }
  int control_dim() const { return static_cast<int>(values_.cols()); }
  int state_dim() const { return state_dim_; }

  // W(t_k) and b(t_k) unpacked from row k
  Eigen::MatrixXd weight_at(int k) const;
  Eigen::VectorXd bias_at(int k) const;

  Eigen::VectorXd to_vector() const { return grid_to_vector(values_); }
  static ControlSignal from_vector(const Eigen::VectorXd& v, int num_steps,
                                   int control_dim);

  ControlSignal shifted(const Eigen::MatrixXd& delta) const;

 private:
  Eigen::MatrixXd values_;  // num_steps x control_dim, all entries finite
  int state_dim_;
};

// States along the Euler trajectory; row k is x(t_k), k = 0..num_steps.
struct Trajectory {
  Eigen::MatrixXd states;

  int num_steps() const { return static_cast<int>(states.rows()) - 1; }
  Eigen::VectorXd state(int k) const { return states.row(k).transpose(); }
  Eigen::VectorXd endpoint() const { return states.row(states.rows() - 1).transpose(); }
};

// zero-padding embedding of an input into the state space
Eigen::VectorXd uplift(const Eigen::VectorXd& x, const ModelConfig& cfg);

// coordinate-selection readout and its (constant) matrix form
Eigen::MatrixXd readout_matrix(const ModelConfig& cfg);
Eigen::VectorXd readout(const Eigen::VectorXd& state, const ModelConfig& cfg);

/* Explicit Euler from the lifted input; throws numeric_error naming the step
 * index if a state stops being finite.  x0 has input_dim entries.  */
Trajectory integrate(const ControlSignal& u, const Eigen::VectorXd& x0,
                     const ModelConfig& cfg);

// readout of the final state: the network's prediction for input x0
Eigen::VectorXd predict(const ControlSignal& u, const Eigen::VectorXd& x0,
                        const ModelConfig& cfg);

/* ---- control checkpoint ----------------------------------------------
 * Binary, little-endian:
 *   bytes 0..7    magic "RNODEU1\n"
 *   bytes 8..11   u32 num_steps
 *   bytes 12..15  u32 control_dim
 *   bytes 16..23  f64 dt
 *   bytes 24..31  layout tag "WROWMAJB" (weights row-major, then bias)
 *   bytes 32..    num_steps*control_dim f64 values, row k contiguous
 * Round-trips bit-exactly.  */
struct StoredControl {
  ControlSignal u;
  double dt;
};

void save_control(const ControlSignal& u, double dt, const std::filesystem::path& path);
StoredControl load_control(const std::filesystem::path& path);

}  // namespace rnode
