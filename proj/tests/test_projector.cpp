#include "doctest.h"
#include "oracles.hpp"
#include "rnode/projector.hpp"

using namespace rnode;

namespace {

Eigen::MatrixXd random_rows(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_SUITE("projector") {

TEST_CASE("an empty stack projects every vector to itself") {
  ConstraintStack stack;
  CHECK(stack.empty());
  const Eigen::VectorXd g = oracles::random_direction(40, 11);
  CHECK((stack.project_to_kernel(g) - g).norm() == 0.0);
}

TEST_CASE("projection is idempotent, annihilating and contractive") {
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd M = random_rows(4, 60, mix_seed(100, trial));
    const ConstraintStack stack = ConstraintStack::from_rows(M);
    const Eigen::VectorXd g = oracles::random_direction(60, mix_seed(200, trial));
    const Eigen::VectorXd d = stack.project_to_kernel(g);
    CHECK((stack.project_to_kernel(d) - d).norm() <= 1e-10 * std::max(1.0, d.norm()));
    CHECK((M * d).norm() <= 1e-8 * M.norm() * g.norm());
    CHECK(d.norm() <= g.norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("projection is the closest kernel element to the input") {
  const Eigen::MatrixXd M = random_rows(3, 50, 4321);
  const ConstraintStack stack = ConstraintStack::from_rows(M);
  const Eigen::VectorXd g = oracles::random_direction(50, 8765);
  const Eigen::VectorXd d = stack.project_to_kernel(g);
  const double mine = (g - d).norm();
  Rng rng(999);
  for (int s = 0; s < 1000; ++s) {
    Eigen::VectorXd w(50);
    for (int i = 0; i < 50; ++i) w(i) = rng.uniform(-2.0, 2.0);
    const Eigen::VectorXd z = stack.project_to_kernel(w);  // arbitrary kernel element
    CHECK((g - z).norm() >= mine - 1e-10);
  }
}

TEST_CASE("duplicated and nearly dependent rows do not break the projector") {
  const Eigen::MatrixXd M = random_rows(3, 40, 777);
  Eigen::MatrixXd doubled(6, 40);
  doubled << M, M;
  const ConstraintStack once = ConstraintStack::from_rows(M);
  const ConstraintStack twice = ConstraintStack::from_rows(doubled);
  const Eigen::VectorXd g = oracles::random_direction(40, 3141);
  CHECK((once.project_to_kernel(g) - twice.project_to_kernel(g)).norm() <=
        1e-8 * g.norm());

  Eigen::MatrixXd nearly(4, 40);
  nearly << M, (M.row(0) * (1.0 + 1e-13));
  const ConstraintStack stack = ConstraintStack::from_rows(nearly);
  const Eigen::VectorXd d = stack.project_to_kernel(g);
  CHECK((nearly * d).norm() <= 1e-8 * nearly.norm() * g.norm());
}

TEST_CASE("refresh stacks one sensitivity block per memorized point, in order") {
  ModelConfig cfg;
  const ControlSignal u = ControlSignal::random(cfg, 0.5, 616);
  std::vector<LabeledPoint> pts(2);
  pts[0].x = Eigen::Vector2d(0.3, 0.1);
  pts[0].y = Eigen::VectorXd::Constant(1, 1.0);
  pts[1].x = Eigen::Vector2d(-0.6, 0.8);
  pts[1].y = Eigen::VectorXd::Constant(1, -1.0);
  ConstraintStack stack;
  stack.refresh(u, pts, cfg);
  REQUIRE(stack.row_count() == 2);
  for (int i = 0; i < 2; ++i) {
    const SensitivityMatrix S = compute_sensitivity(u, pts[i].x, cfg);
    CHECK((stack.rows().row(i) - S.matrix().row(0)).norm() == 0.0);
  }
  // a projected direction cannot move either endpoint to first order
  const Eigen::VectorXd g =
      oracles::random_direction(stack.rows().cols(), 2718);
  const Eigen::VectorXd d = stack.project_to_kernel(g);
  CHECK((stack.rows() * d).norm() <= 1e-8 * stack.rows().norm() * g.norm());
}

}  // TEST_SUITE
