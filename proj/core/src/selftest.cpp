#include <cmath>
#include <ostream>

#include "rnode/harness.hpp"
#include "rnode/projector.hpp"
#include "rnode/rng.hpp"

namespace rnode {

namespace {

bool report(std::ostream& out, const std::string& name, bool ok,
            const std::string& detail = "") {
  out << (ok ? "[ ok ] " : "[FAIL] ") << name;
  if (!ok && !detail.empty()) out << " (" << detail << ")";
  out << '\n';
  return ok;
}

ModelConfig desk_config() { return ModelConfig{}; }

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

// error of the first-order prediction of the end-point map along a direction
double linearization_gap(const ControlSignal& u, const Eigen::VectorXd& x0,
                         const Eigen::VectorXd& dir, double h, const ModelConfig& cfg,
                         const SensitivityMatrix& S) {
  const ControlSignal u_h =
      u.shifted(vector_to_grid(h * dir, cfg.num_steps, cfg.control_dim()));
  const Eigen::VectorXd moved = predict(u_h, x0, cfg);
  const Eigen::VectorXd base = predict(u, x0, cfg);
  return (moved - base - h * (S.matrix() * dir)).norm();
}

bool check_fd_convergence(std::ostream& out) {
  const ModelConfig cfg = desk_config();
  bool ok = true;
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(mix_seed(11, static_cast<std::uint64_t>(trial)));
    const ControlSignal u = ControlSignal::random(cfg, 0.6, rng.next());
    const Eigen::Vector2d x0(rng.uniform(-1, 1), rng.uniform(-1, 1));
    Eigen::VectorXd dir(static_cast<Eigen::Index>(cfg.num_steps) * cfg.control_dim());
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = rng.uniform(-1, 1);
    const SensitivityMatrix S = compute_sensitivity(u, x0, cfg);
    // steps small enough that the cubic remainder is negligible, large enough
    // that the gap (~1e-9) sits far above double-precision noise
    const double e1 = linearization_gap(u, x0, dir, 2e-3, cfg, S);
    const double e2 = linearization_gap(u, x0, dir, 1e-3, cfg, S);
    const double ratio = e1 / e2;
    if (!(ratio > 3.3 && ratio < 4.7)) ok = false;
  }
  return report(out, "sensitivity matches finite differences at second order", ok);
}

bool check_worst_case(std::ostream& out) {
  bool formula_ok = true, beats_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(mix_seed(23, static_cast<std::uint64_t>(trial)));
    const int width = 40;
    Eigen::MatrixXd L(1, width);
    for (int i = 0; i < width; ++i) L(0, i) = rng.uniform(-1, 1);
    const double r0 = rng.uniform(-2, 2);
    const Eigen::VectorXd r = Eigen::VectorXd::Constant(1, r0);
    AdversaryConfig acfg;
    acfg.penalty_weight = 1.5 * L.squaredNorm();
    acfg.radius = 0.3;
    const SensitivityMatrix S(L, 0.25, 4, 10);
    const Disturbance e = worst_case_disturbance(S, r, acfg);

    // single-output closed form: radius * sign(r) * L^T / sup|L|
    const Eigen::VectorXd expect =
        (acfg.radius * (r0 >= 0 ? 1.0 : -1.0) / L.cwiseAbs().maxCoeff()) *
        L.row(0).transpose();
    if ((e.to_vector() - expect).lpNorm<Eigen::Infinity>() > 1e-12) formula_ok = false;

    const double grown = (r + L * e.to_vector()).squaredNorm() -
                         acfg.penalty_weight * e.to_vector().squaredNorm();
    for (int s = 0; s < 50; ++s) {
      Eigen::VectorXd cand(width);
      for (int i = 0; i < width; ++i) cand(i) = rng.uniform(-acfg.radius, acfg.radius);
      const double got =
          (r + L * cand).squaredNorm() - acfg.penalty_weight * cand.squaredNorm();
      if (got > grown + 1e-12) beats_ok = false;
    }
  }
  bool ok = report(out, "worst-case direction matches the single-output closed form",
                   formula_ok);
  ok &= report(out, "worst-case direction beats random feasible disturbances", beats_ok);
  return ok;
}

bool check_small_solve(std::ostream& out) {
  bool ok = true;
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(mix_seed(31, static_cast<std::uint64_t>(trial)));
    const int rows = 3, width = 60;
    Eigen::MatrixXd L(rows, width);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < width; ++j) L(i, j) = rng.uniform(-1, 1);
    Eigen::VectorXd r(rows);
    for (int i = 0; i < rows; ++i) r(i) = rng.uniform(-1, 1);
    const Eigen::MatrixXd gram = L * L.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double pen = 1.3 * es.eigenvalues().maxCoeff();

    // reference: direct solve in the full control space
    const Eigen::MatrixXd big =
        pen * Eigen::MatrixXd::Identity(width, width) - L.transpose() * L;
    const Eigen::VectorXd direct = big.ldlt().solve(L.transpose() * r);
    const Eigen::VectorXd small = L.transpose() * ((pen * Eigen::MatrixXd::Identity(rows, rows) - gram).ldlt().solve(r));
    if ((direct - small).norm() > 1e-8 * direct.norm()) ok = false;
  }
  return report(out, "small-system solve agrees with the direct control-space solve", ok);
}

bool check_projection(std::ostream& out) {
  bool ok = true;
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(mix_seed(47, static_cast<std::uint64_t>(trial)));
    Eigen::MatrixXd M(3, 50);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 50; ++j) M(i, j) = rng.uniform(-1, 1);
    const ConstraintStack stack = ConstraintStack::from_rows(M);
    Eigen::VectorXd g(50);
    for (int j = 0; j < 50; ++j) g(j) = rng.uniform(-1, 1);
    const Eigen::VectorXd d = stack.project_to_kernel(g);
    const Eigen::VectorXd dd = stack.project_to_kernel(d);
    if ((dd - d).norm() > 1e-10 * std::max(1.0, d.norm())) ok = false;
    if ((M * d).norm() > 1e-8 * M.norm() * g.norm()) ok = false;
    if (d.norm() > g.norm() * (1.0 + 1e-12)) ok = false;
  }
  return report(out, "kernel projection is idempotent, annihilating and contractive", ok);
}

bool check_sampling(std::ostream& out) {
  const Disturbance a = sample_disturbance(0.07, 16, 9, 99);
  const Disturbance b = sample_disturbance(0.07, 16, 9, 99);
  bool ok = a.inf_norm() == 0.07 && same(a.values(), b.values());
  const std::vector<LabeledPoint> d1 = generate_dataset({12, 5, 0.5, 1.0});
  const std::vector<LabeledPoint> d2 = generate_dataset({12, 5, 0.5, 1.0});
  for (std::size_t i = 0; ok && i < d1.size(); ++i) {
    if (!same(d1[i].x, d2[i].x) || !same(d1[i].y, d2[i].y)) ok = false;
    if (d1[i].y(0) != disk_label(d1[i].x(0), d1[i].x(1), 0.5)) ok = false;
  }
  return report(out, "seeded sampling is exact and reproducible", ok);
}

bool check_integrator(std::ostream& out) {
  const ModelConfig cfg = desk_config();
  const ControlSignal zero = ControlSignal::zero(cfg);
  const Eigen::Vector2d x0(0.4, -0.3);
  const Trajectory traj = integrate(zero, x0, cfg);
  bool ok = true;
  const Eigen::VectorXd lifted = uplift(x0, cfg);
  for (int k = 0; k <= cfg.num_steps; ++k)
    if (!same(traj.state(k), lifted)) ok = false;
  const ControlSignal u = ControlSignal::random(cfg, 0.5, 321);
  const Trajectory t1 = integrate(u, x0, cfg);
  const Trajectory t2 = integrate(u, x0, cfg);
  if (!same(t1.states, t2.states)) ok = false;
  return report(out, "integrator fixes the origin control and is deterministic", ok);
}

}  // namespace

bool run_selftest(std::ostream& out) {
  bool ok = true;
  ok &= check_integrator(out);
  ok &= check_fd_convergence(out);
  ok &= check_worst_case(out);
  ok &= check_small_solve(out);
  ok &= check_projection(out);
  ok &= check_sampling(out);
  out << (ok ? "selftest: all checks passed\n" : "selftest: FAILURES\n");
  return ok;
}

}  // namespace rnode
