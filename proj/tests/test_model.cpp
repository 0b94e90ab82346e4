#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "rnode/model.hpp"
#include "rnode/rng.hpp"

using namespace rnode;
namespace fs = std::filesystem;

namespace {
fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / (std::string("rnode_model_test_") + name);
}
}  // namespace

TEST_SUITE("model") {

TEST_CASE("uplift pads the input with zeros and readout selects its coordinate") {
  ModelConfig cfg;
  const Eigen::Vector2d x(0.3, -0.8);
  const Eigen::VectorXd lifted = uplift(x, cfg);
  REQUIRE(lifted.size() == cfg.state_dim);
  CHECK(lifted(0) == 0.3);
  CHECK(lifted(1) == -0.8);
  for (int i = cfg.input_dim; i < cfg.state_dim; ++i) CHECK(lifted(i) == 0.0);

  Eigen::VectorXd state(5);
  state << 1, 2, 3, 4, 5;
  CHECK(readout(state, cfg)(0) == 5.0);
  const Eigen::MatrixXd R = readout_matrix(cfg);
  REQUIRE(R.rows() == cfg.output_dim);
  REQUIRE(R.cols() == cfg.state_dim);
  CHECK((R * state)(0) == 5.0);
}

TEST_CASE("state-independent dynamics integrate exactly: endpoint = start + tanh(bias)") {
  // with zero weights the Euler sum telescopes, so the one-second flow adds
  // exactly tanh(b) to every coordinate regardless of step count
  ModelConfig cfg;
  const double b = std::atanh(0.5);
  Eigen::MatrixXd grid = Eigen::MatrixXd::Zero(cfg.num_steps, cfg.control_dim());
  for (int k = 0; k < cfg.num_steps; ++k)
    for (int i = 0; i < cfg.state_dim; ++i)
      grid(k, cfg.state_dim * cfg.state_dim + i) = b;
  const ControlSignal u{grid};
  const Eigen::Vector2d x0(0.25, 0.0);
  const Trajectory traj = integrate(u, x0, cfg);
  const Eigen::VectorXd end = traj.endpoint();
  CHECK(end(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(end(4) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(predict(u, x0, cfg)(0) == end(4));
}

TEST_CASE("zero control freezes the state, so the prediction reads the padding") {
  ModelConfig cfg;
  const ControlSignal z = ControlSignal::zero(cfg);
  const Eigen::Vector2d x0(0.9, -0.2);
  CHECK(predict(z, x0, cfg)(0) == 0.0);
}

TEST_CASE("saturating dynamics keep every state within start plus elapsed time") {
  ModelConfig cfg;
  const ControlSignal u = ControlSignal::random(cfg, 5.0, 77);
  const Eigen::Vector2d x0(1.0, -1.0);
  const Trajectory traj = integrate(u, x0, cfg);
  for (int k = 0; k <= cfg.num_steps; ++k)
    CHECK(traj.state(k).lpNorm<Eigen::Infinity>() <= 1.0 + k * cfg.dt + 1e-12);
}

TEST_CASE("random control is seed-deterministic and respects its amplitude") {
  ModelConfig cfg;
  const ControlSignal a = ControlSignal::random(cfg, 0.3, 12345);
  const ControlSignal b = ControlSignal::random(cfg, 0.3, 12345);
  const ControlSignal c = ControlSignal::random(cfg, 0.3, 54321);
  CHECK((a.values().array() == b.values().array()).all());
  CHECK_FALSE((a.values().array() == c.values().array()).all());
  CHECK(a.values().cwiseAbs().maxCoeff() <= 0.3);
}

TEST_CASE("row-major weight and trailing bias unpack from each grid row") {
  ModelConfig cfg;
  cfg.state_dim = 3;
  cfg.input_dim = 2;
  cfg.readout_index = 2;
  cfg.num_steps = 2;
  cfg.dt = 0.5;
  Eigen::MatrixXd grid(2, cfg.control_dim());
  for (int j = 0; j < grid.cols(); ++j) {
    grid(0, j) = j;
    grid(1, j) = 100 + j;
  }
  const ControlSignal u{grid};
  const Eigen::MatrixXd W0 = u.weight_at(0);
  CHECK(W0(0, 0) == 0.0);
  CHECK(W0(0, 1) == 1.0);
  CHECK(W0(1, 0) == 3.0);
  CHECK(W0(2, 2) == 8.0);
  const Eigen::VectorXd b1 = u.bias_at(1);
  CHECK(b1(0) == 109.0);
  CHECK(b1(2) == 111.0);
}

TEST_CASE("flattened layout keeps each time step contiguous") {
  Eigen::MatrixXd grid(2, 3);
  grid << 1, 2, 3, 4, 5, 6;
  const Eigen::VectorXd v = grid_to_vector(grid);
  REQUIRE(v.size() == 6);
  CHECK(v(0) == 1);
  CHECK(v(2) == 3);
  CHECK(v(3) == 4);
  const Eigen::MatrixXd back = vector_to_grid(v, 2, 3);
  CHECK((back.array() == grid.array()).all());
  const ControlSignal u = ControlSignal::from_vector(v, 2, 3);
  CHECK((u.values().array() == grid.array()).all());
  CHECK((u.to_vector().array() == v.array()).all());
}

TEST_CASE("shifting a control adds the grid elementwise") {
  ModelConfig cfg;
  const ControlSignal u = ControlSignal::random(cfg, 0.2, 9);
  Eigen::MatrixXd delta =
      Eigen::MatrixXd::Constant(cfg.num_steps, cfg.control_dim(), 0.125);
  const ControlSignal moved = u.shifted(delta);
  CHECK(((moved.values() - u.values()).array() == 0.125).all());
}

TEST_CASE("checkpoint files round-trip bit-exactly") {
  ModelConfig cfg;
  const ControlSignal u = ControlSignal::random(cfg, 0.7, 20240615);
  const fs::path path = temp_file("roundtrip.ckpt");
  save_control(u, cfg.dt, path);
  const StoredControl back = load_control(path);
  CHECK(back.dt == cfg.dt);
  REQUIRE(back.u.num_steps() == u.num_steps());
  CHECK((back.u.values().array() == u.values().array()).all());
  fs::remove(path);
}

TEST_CASE("corrupted checkpoint header is rejected") {
  ModelConfig cfg;
  const ControlSignal u = ControlSignal::random(cfg, 0.7, 5);
  const fs::path path = temp_file("corrupt.ckpt");
  save_control(u, cfg.dt, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXXXXXX", 8);
  }
  CHECK_THROWS_AS((void)load_control(path), config_error);
  fs::remove(path);
}

TEST_CASE("truncated checkpoint payload is rejected") {
  ModelConfig cfg;
  const ControlSignal u = ControlSignal::random(cfg, 0.7, 6);
  const fs::path path = temp_file("truncated.ckpt");
  save_control(u, cfg.dt, path);
  fs::resize_file(path, fs::file_size(path) - 16);
  CHECK_THROWS_AS((void)load_control(path), config_error);
  fs::remove(path);
}

TEST_CASE("non-finite control values abort integration with a numeric error") {
  ModelConfig cfg;
  Eigen::MatrixXd grid = Eigen::MatrixXd::Zero(cfg.num_steps, cfg.control_dim());
  grid(40, 3) = std::numeric_limits<double>::quiet_NaN();
  const ControlSignal u{grid};
  const Eigen::Vector2d x0(0.1, 0.1);
  CHECK_THROWS_AS((void)integrate(u, x0, cfg), numeric_error);
}

TEST_CASE("malformed model configurations are rejected") {
  ModelConfig cfg;
  cfg.readout_index = 5;  // readout window exceeds the state
  CHECK_THROWS_AS(cfg.validate(), config_error);
  ModelConfig neg;
  neg.dt = -0.01;
  CHECK_THROWS_AS(neg.validate(), config_error);
  ModelConfig wide;
  wide.input_dim = 9;  // cannot lift a 9-vector into a 5-state
  CHECK_THROWS_AS(wide.validate(), config_error);
}

}  // TEST_SUITE
