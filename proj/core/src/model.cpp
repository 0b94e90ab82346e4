#include "rnode/model.hpp"

#include <cmath>
#include <cstring>

#include "rnode/io.hpp"
#include "rnode/rng.hpp"

namespace rnode {

namespace {

// state_dim from control_dim: the positive root of n^2 + n = p
int state_dim_from_control_dim(Eigen::Index p) {
  int n = static_cast<int>(std::floor((std::sqrt(4.0 * static_cast<double>(p) + 1.0) - 1.0) / 2.0));
  for (int cand = std::max(1, n - 1); cand <= n + 1; ++cand)
    if (static_cast<Eigen::Index>(cand) * cand + cand == p) return cand;
  throw config_error("control grid has " + std::to_string(p) +
                     " columns, which is not n*n+n for any state width n");
}

}  // namespace

void ModelConfig::validate() const {
  if (state_dim <= 0 || input_dim <= 0 || output_dim <= 0 || num_steps <= 0)
    throw config_error("model config: dimensions and step count must be positive");
  if (input_dim > state_dim)
    throw config_error("model config: input_dim " + std::to_string(input_dim) +
                       " exceeds state_dim " + std::to_string(state_dim));
  if (readout_index < 0 || readout_index + output_dim > state_dim)
    throw config_error("model config: readout rows [" + std::to_string(readout_index) +
                       ", " + std::to_string(readout_index + output_dim) +
                       ") fall outside the state of width " + std::to_string(state_dim));
  if (!(dt > 0.0)) throw config_error("model config: dt must be positive");
  if (std::abs(num_steps * dt - 1.0) > 1e-12)
    throw config_error("model config: num_steps*dt must equal 1 (time horizon), got " +
                       std::to_string(num_steps * dt));
}

ControlSignal::ControlSignal(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() <= 0 || values_.cols() <= 0)
    throw config_error("control grid must be non-empty");
  if (!values_.allFinite())
    throw config_error("control grid contains non-finite entries");
  state_dim_ = state_dim_from_control_dim(values_.cols());
}

ControlSignal ControlSignal::zero(const ModelConfig& cfg) {
  cfg.validate();
  return ControlSignal(Eigen::MatrixXd::Zero(cfg.num_steps, cfg.control_dim()));
}

ControlSignal ControlSignal::random(const ModelConfig& cfg, double scale,
                                    std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  Eigen::MatrixXd v(cfg.num_steps, cfg.control_dim());
  for (Eigen::Index k = 0; k < v.rows(); ++k)
    for (Eigen::Index c = 0; c < v.cols(); ++c) v(k, c) = rng.uniform(-scale, scale);
  return ControlSignal(std::move(v));
}

Eigen::MatrixXd ControlSignal::weight_at(int k) const {
  const int n = state_dim_;
  Eigen::MatrixXd W(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) W(i, j) = values_(k, i * n + j);
  return W;
}

Eigen::VectorXd ControlSignal::bias_at(int k) const {
  const int n = state_dim_;
  return values_.row(k).segment(n * n, n).transpose();
}

ControlSignal ControlSignal::from_vector(const Eigen::VectorXd& v, int num_steps,
                                         int control_dim) {
  return ControlSignal(vector_to_grid(v, num_steps, control_dim));
}

ControlSignal ControlSignal::shifted(const Eigen::MatrixXd& delta) const {
  if (delta.rows() != values_.rows() || delta.cols() != values_.cols())
    throw config_error("control shift has mismatched shape");
  return ControlSignal(values_ + delta);
}

Eigen::VectorXd uplift(const Eigen::VectorXd& x, const ModelConfig& cfg) {
  cfg.validate();
  if (x.size() != cfg.input_dim)
    throw config_error("uplift: input has " + std::to_string(x.size()) +
                       " entries, expected " + std::to_string(cfg.input_dim));
  Eigen::VectorXd z = Eigen::VectorXd::Zero(cfg.state_dim);
  z.head(cfg.input_dim) = x;
  return z;
}

Eigen::MatrixXd readout_matrix(const ModelConfig& cfg) {
  cfg.validate();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(cfg.output_dim, cfg.state_dim);
  for (int m = 0; m < cfg.output_dim; ++m) R(m, cfg.readout_index + m) = 1.0;
  return R;
}

Eigen::VectorXd readout(const Eigen::VectorXd& state, const ModelConfig& cfg) {
  cfg.validate();
  if (state.size() != cfg.state_dim)
    throw config_error("readout: state has " + std::to_string(state.size()) +
                       " entries, expected " + std::to_string(cfg.state_dim));
  return state.segment(cfg.readout_index, cfg.output_dim);
}

Trajectory integrate(const ControlSignal& u, const Eigen::VectorXd& x0,
                     const ModelConfig& cfg) {
  cfg.validate();
  if (u.num_steps() != cfg.num_steps || u.control_dim() != cfg.control_dim())
    throw config_error("integrate: control grid is " + std::to_string(u.num_steps()) +
                       "x" + std::to_string(u.control_dim()) + ", expected " +
                       std::to_string(cfg.num_steps) + "x" +
                       std::to_string(cfg.control_dim()));
  const int n = cfg.state_dim;
  Eigen::VectorXd x = uplift(x0, cfg);
  Eigen::MatrixXd states(cfg.num_steps + 1, n);
  states.row(0) = x.transpose();
  Eigen::MatrixXd W(n, n);
  Eigen::VectorXd z(n);
  for (int k = 0; k < cfg.num_steps; ++k) {
    W = u.weight_at(k);
    z.noalias() = W * x;
    z += u.bias_at(k);
    x += cfg.dt * z.array().tanh().matrix();
    if (!x.allFinite())
      throw numeric_error("integrate: non-finite state at step " + std::to_string(k));
    states.row(k + 1) = x.transpose();
  }
  return Trajectory{std::move(states)};
}

Eigen::VectorXd predict(const ControlSignal& u, const Eigen::VectorXd& x0,
                        const ModelConfig& cfg) {
  return readout(integrate(u, x0, cfg).endpoint(), cfg);
}

namespace {
constexpr char kMagic[8] = {'R', 'N', 'O', 'D', 'E', 'U', '1', '\n'};
constexpr char kLayout[8] = {'W', 'R', 'O', 'W', 'M', 'A', 'J', 'B'};

template <typename T>
void append_raw(std::string& s, const T& v) {
  s.append(reinterpret_cast<const char*>(&v), sizeof v);
}
}  // namespace

void save_control(const ControlSignal& u, double dt, const std::filesystem::path& path) {
  const auto rows = static_cast<std::uint32_t>(u.num_steps());
  const auto cols = static_cast<std::uint32_t>(u.control_dim());
  std::string buf;
  buf.reserve(32 + sizeof(double) * rows * cols);
  buf.append(kMagic, sizeof kMagic);
  append_raw(buf, rows);
  append_raw(buf, cols);
  append_raw(buf, dt);
  buf.append(kLayout, sizeof kLayout);
  const Eigen::MatrixXd& v = u.values();
  for (std::uint32_t k = 0; k < rows; ++k)
    for (std::uint32_t c = 0; c < cols; ++c) append_raw(buf, v(k, c));
  write_file_atomic(path, buf);
}

StoredControl load_control(const std::filesystem::path& path) {
  const std::string buf = read_file(path);
  if (buf.size() < 32 || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw config_error("checkpoint: bad magic in " + path.string());
  std::uint32_t rows = 0, cols = 0;
  double dt = 0.0;
  std::memcpy(&rows, buf.data() + 8, 4);
  std::memcpy(&cols, buf.data() + 12, 4);
  std::memcpy(&dt, buf.data() + 16, 8);
  if (std::memcmp(buf.data() + 24, kLayout, sizeof kLayout) != 0)
    throw config_error("checkpoint: unknown layout tag in " + path.string());
  const std::size_t expect = 32 + sizeof(double) * static_cast<std::size_t>(rows) * cols;
  if (rows == 0 || cols == 0 || buf.size() != expect)
    throw config_error("checkpoint: truncated or oversized file " + path.string());
  Eigen::MatrixXd v(rows, cols);
  std::size_t off = 32;
  for (std::uint32_t k = 0; k < rows; ++k)
    for (std::uint32_t c = 0; c < cols; ++c) {
      std::memcpy(&v(k, c), buf.data() + off, 8);
      off += 8;
    }
  if (!v.allFinite())
    throw config_error("checkpoint: non-finite values in " + path.string());
  return StoredControl{ControlSignal(std::move(v)), dt};
}

}  // namespace rnode
