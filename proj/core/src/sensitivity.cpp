#include "rnode/sensitivity.hpp"

namespace rnode {

std::vector<StepJacobians> jacobians_along(const ControlSignal& u,
                                           const Trajectory& traj,
                                           const ModelConfig& cfg) {
  cfg.validate();
  if (traj.num_steps() != cfg.num_steps || traj.states.cols() != cfg.state_dim)
    throw config_error("jacobians_along: trajectory shape does not match config");
  if (u.num_steps() != cfg.num_steps || u.control_dim() != cfg.control_dim())
    throw config_error("jacobians_along: control grid does not match config");
  const int n = cfg.state_dim;
  const int p = cfg.control_dim();
  std::vector<StepJacobians> out;
  out.reserve(static_cast<std::size_t>(cfg.num_steps));
  for (int k = 0; k < cfg.num_steps; ++k) {
    const Eigen::VectorXd x = traj.state(k);
    const Eigen::MatrixXd W = u.weight_at(k);
    const Eigen::VectorXd s = (W * x + u.bias_at(k)).array().tanh().matrix();
    const Eigen::VectorXd d = (1.0 - s.array().square()).matrix();
    StepJacobians J;
    J.A = d.asDiagonal() * W;
    J.B = Eigen::MatrixXd::Zero(n, p);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) J.B(i, i * n + j) = d(i) * x(j);
      J.B(i, n * n + i) = d(i);
    }
    out.push_back(std::move(J));
  }
  return out;
}

SensitivityMatrix::SensitivityMatrix(Eigen::MatrixXd m, double dt, int num_steps,
                                     int control_dim, std::uint64_t base_hash)
    : m_(std::move(m)),
      dt_(dt),
      num_steps_(num_steps),
      control_dim_(control_dim),
      base_hash_(base_hash) {
  if (m_.cols() != static_cast<Eigen::Index>(num_steps_) * control_dim_)
    throw config_error("sensitivity matrix: column count does not equal steps*control_dim");
  if (!(dt_ > 0.0)) throw config_error("sensitivity matrix: dt must be positive");
}

SensitivityMatrix compute_sensitivity(const ControlSignal& u, const Eigen::VectorXd& x0,
                                      const ModelConfig& cfg) {
  const Trajectory traj = integrate(u, x0, cfg);
  const std::vector<StepJacobians> jac = jacobians_along(u, traj, cfg);
  const int p = cfg.control_dim();
  Eigen::MatrixXd L(cfg.output_dim, static_cast<Eigen::Index>(cfg.num_steps) * p);
  /* backward sweep: c holds c_{k+1} when column block k is written */
  Eigen::MatrixXd c = readout_matrix(cfg);
  for (int k = cfg.num_steps - 1; k >= 0; --k) {
    L.block(0, static_cast<Eigen::Index>(k) * p, cfg.output_dim, p).noalias() =
        cfg.dt * (c * jac[static_cast<std::size_t>(k)].B);
    c += cfg.dt * (c * jac[static_cast<std::size_t>(k)].A).eval();
  }
  std::uint64_t h = fnv1a(u.values());
  h = fnv1a(x0.data(), sizeof(double) * static_cast<std::size_t>(x0.size()), h);
  return SensitivityMatrix(std::move(L), cfg.dt, cfg.num_steps, p, h);
}

}  // namespace rnode
