#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "rnode/harness.hpp"

using namespace rnode;
namespace fs = std::filesystem;

namespace {

ModelConfig small_model() {
  ModelConfig cfg;
  cfg.state_dim = 3;
  cfg.input_dim = 2;
  cfg.readout_index = 2;
  cfg.num_steps = 20;
  cfg.dt = 0.05;
  return cfg;
}

LabeledPoint make_point(double x1, double x2, double label) {
  LabeledPoint pt;
  pt.x = Eigen::Vector2d(x1, x2);
  pt.y = Eigen::VectorXd::Constant(1, label);
  return pt;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("disk labels: center in, corner out, boundary in") {
  CHECK(disk_label(0.0, 0.0, 0.5) == 1.0);
  CHECK(disk_label(1.0, 1.0, 0.5) == -1.0);
  CHECK(disk_label(0.5, 0.0, 0.5) == 1.0);
  CHECK(disk_label(0.3, 0.4, 0.5) == 1.0);
  CHECK(disk_label(0.30001, 0.4, 0.5) == -1.0);
}

TEST_CASE("datasets are reproducible, labeled by the disk rule, pairwise distinct") {
  const DatasetParams params{40, 4242, 0.5, 1.0};
  const auto a = generate_dataset(params);
  const auto b = generate_dataset(params);
  REQUIRE(a.size() == 40);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i].x.array() == b[i].x.array()).all());
    CHECK(a[i].y(0) == disk_label(a[i].x(0), a[i].x(1), 0.5));
    CHECK(std::abs(a[i].x(0)) <= 1.0);
    CHECK(std::abs(a[i].x(1)) <= 1.0);
    for (std::size_t j = i + 1; j < a.size(); ++j)
      CHECK((a[i].x - a[j].x).norm() > 0.0);
  }
}

TEST_CASE("inside fraction converges to the area ratio") {
  const auto big = generate_dataset({100000, 17, 0.5, 1.0});
  long inside = 0;
  for (const auto& pt : big)
    if (pt.y(0) > 0) ++inside;
  const double frac = static_cast<double>(inside) / static_cast<double>(big.size());
  CHECK(frac == doctest::Approx(std::numbers::pi / 16.0).epsilon(0.05));
  CHECK(std::abs(frac - std::numbers::pi / 16.0) < 0.01);
}

TEST_CASE("dataset files round-trip exactly") {
  const auto data = generate_dataset({15, 31337, 0.5, 1.0});
  const fs::path path = fs::temp_directory_path() / "rnode_harness_data.csv";
  write_dataset_csv(data, path);
  const std::string text = slurp(path);
  CHECK(text.rfind("x1,x2,y\n", 0) == 0);
  const auto back = read_dataset_csv(path);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].x(0) == data[i].x(0));
    CHECK(back[i].x(1) == data[i].x(1));
    CHECK(back[i].y(0) == data[i].y(0));
  }
  fs::remove(path);
}

TEST_CASE("malformed dataset files are rejected with a config error") {
  const fs::path path = fs::temp_directory_path() / "rnode_harness_bad.csv";
  {
    std::ofstream out(path);
    out << "x1,x2\n0.1,0.2\n";  // header missing the label column
  }
  CHECK_THROWS_AS((void)read_dataset_csv(path), config_error);
  {
    std::ofstream out(path);
    out << "x1,x2,y\n0.1,0.2,not_a_number\n";
  }
  CHECK_THROWS_AS((void)read_dataset_csv(path), config_error);
  fs::remove(path);
}

TEST_CASE("random disturbances hit the requested magnitude exactly") {
  const Disturbance z = sample_disturbance(0.0, 12, 6, 5);
  CHECK(z.is_zero());
  const Disturbance a = sample_disturbance(0.13, 12, 6, 5);
  const Disturbance b = sample_disturbance(0.13, 12, 6, 5);
  const Disturbance c = sample_disturbance(0.13, 12, 6, 6);
  CHECK(a.inf_norm() == doctest::Approx(0.13).epsilon(1e-12));
  CHECK((a.values().array() == b.values().array()).all());
  CHECK_FALSE((a.values().array() == c.values().array()).all());
}

TEST_CASE("magnitude grids parse from ranges and comma lists") {
  const auto ramp = parse_eps_grid("0:0.1:0.3");
  REQUIRE(ramp.size() == 4);
  CHECK(ramp[0] == 0.0);
  CHECK(ramp[3] == doctest::Approx(0.3).epsilon(1e-12));
  const auto list = parse_eps_grid("0.05,0.2,0.4");
  REQUIRE(list.size() == 3);
  CHECK(list[1] == 0.2);
  const auto single = parse_eps_grid("0.1");
  REQUIRE(single.size() == 1);
  CHECK_THROWS_AS((void)parse_eps_grid("0:0.1"), config_error);
  CHECK_THROWS_AS((void)parse_eps_grid("nope"), config_error);
}

TEST_CASE("run configuration: file text, overrides, and unknown keys") {
  RunConfig cfg = parse_config_text(
      "# comment\n"
      "num_steps = 50\n"
      "dt = 0.02\n"
      "inner_tol = 0.04\n"
      "weight_decay = 0.0003\n"
      "point_order = shuffle\n"
      "penalty_weight = 0.3\n");
  CHECK(cfg.model.num_steps == 50);
  CHECK(cfg.model.dt == 0.02);
  CHECK(cfg.train.inner_tol == 0.04);
  CHECK(cfg.train.weight_decay == 0.0003);
  CHECK(cfg.train.point_order == "shuffle");
  CHECK(cfg.train.adversary.penalty_weight == 0.3);

  apply_config_override(cfg, "robust_tol", "0.25");
  CHECK(cfg.train.robust_tol == 0.25);
  CHECK_THROWS_AS(apply_config_override(cfg, "no_such_key", "1"), config_error);
  CHECK_THROWS_AS((void)parse_config_text("momentum = 0.9\n"), config_error);
  CHECK_THROWS_AS((void)parse_config_text("dt = banana\n"), config_error);
}

TEST_CASE("a memorizing control scores perfectly on its own points at zero disturbance") {
  const ModelConfig mcfg = small_model();
  TrainConfig tcfg;
  tcfg.seed = 7;
  const std::vector<LabeledPoint> data{make_point(0.1, 0.0, 1.0),
                                       make_point(0.85, 0.7, -1.0)};
  const TrainState st = train_robust(data, mcfg, tcfg);
  REQUIRE(st.failures.empty());
  EvalOptions opts;
  opts.eps_grid = {0.0};
  opts.samples_per_magnitude = 1;
  opts.seed = 1;
  const auto rows = evaluate(st.u, data, opts, mcfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].accuracy == 1.0);
  CHECK(rows[0].avg_cost <= tcfg.inner_tol);
  CHECK(rows[0].num_diverged == 0);
}

TEST_CASE("exact sign ties count as misclassified") {
  // the zero control predicts exactly zero everywhere
  const ModelConfig mcfg = small_model();
  const ControlSignal z = ControlSignal::zero(mcfg);
  const auto data = generate_dataset({10, 3, 0.5, 1.0});
  EvalOptions opts;
  opts.eps_grid = {0.0};
  opts.samples_per_magnitude = 1;
  const auto rows = evaluate(z, data, opts, mcfg);
  CHECK(rows[0].accuracy == 0.0);
  CHECK(rows[0].num_correct == 0);
  CHECK(rows[0].num_total == 10);
}

TEST_CASE("evaluation reports are deterministic to the bit") {
  const ModelConfig mcfg = small_model();
  const ControlSignal u = ControlSignal::random(mcfg, 0.4, 99);
  const auto data = generate_dataset({25, 8, 0.5, 1.0});
  EvalOptions opts;
  opts.eps_grid = {0.0, 0.05, 0.1};
  opts.samples_per_magnitude = 4;
  opts.seed = 12;
  const auto a = evaluate(u, data, opts, mcfg);
  const auto b = evaluate(u, data, opts, mcfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].avg_cost == b[i].avg_cost);
    CHECK(a[i].accuracy == b[i].accuracy);
    CHECK(a[i].num_correct == b[i].num_correct);
    CHECK(a[i].accuracy == doctest::Approx(static_cast<double>(a[i].num_correct) /
                                           static_cast<double>(a[i].num_total))
                               .epsilon(1e-15));
  }
  CHECK_THROWS_AS(
      (void)evaluate(u, data, EvalOptions{{0.1, 0.05}, 4, 12}, mcfg), config_error);
}

TEST_CASE("worst-case sweeps start from the same clean row and never get cheaper") {
  const ModelConfig mcfg = small_model();
  TrainConfig tcfg;
  tcfg.seed = 7;
  const std::vector<LabeledPoint> data{make_point(0.1, 0.0, 1.0),
                                       make_point(0.85, 0.7, -1.0)};
  const TrainState st = train_robust(data, mcfg, tcfg);
  REQUIRE(st.failures.empty());

  EvalOptions random_opts;
  random_opts.eps_grid = {0.0, 0.08};
  random_opts.samples_per_magnitude = 3;
  random_opts.seed = 21;
  EvalOptions adv_opts = random_opts;
  adv_opts.adversarial = true;
  const auto random_rows = evaluate(st.u, data, random_opts, mcfg);
  const auto adv_rows = evaluate(st.u, data, adv_opts, mcfg);
  CHECK(adv_rows[0].avg_cost == random_rows[0].avg_cost);
  CHECK(adv_rows[0].num_samples == 1);
  // at a memorizing control any worst-case disturbance raises the cost
  CHECK(adv_rows[1].avg_cost >= adv_rows[0].avg_cost);
  // and the targeted direction hurts at least as much as random ones
  CHECK(adv_rows[1].avg_cost >= random_rows[1].avg_cost - 1e-12);
}

TEST_CASE("diverging samples are excluded and counted") {
  const ModelConfig mcfg = small_model();
  const ControlSignal u = ControlSignal::random(mcfg, 0.2, 5);
  std::vector<LabeledPoint> data{make_point(0.2, 0.3, 1.0),
                                 make_point(std::numeric_limits<double>::quiet_NaN(),
                                            0.1, -1.0)};
  EvalOptions opts;
  opts.eps_grid = {0.0};
  opts.samples_per_magnitude = 2;
  const auto rows = evaluate(u, data, opts, mcfg);
  CHECK(rows[0].num_diverged == 2);  // the bad point, once per sample
  CHECK(rows[0].num_total == 2);     // the good point still tallies
}

TEST_CASE("report files carry the exact header and are byte-stable") {
  EvalRow row{};
  row.eps_norm = 0.1;
  row.avg_cost = 0.25;
  row.accuracy = 0.9375;
  row.num_samples = 16;
  row.seed = 7;
  const std::vector<std::pair<std::string, EvalRow>> rows{{"robust", row},
                                                          {"standard", row}};
  const fs::path a = fs::temp_directory_path() / "rnode_harness_report_a.csv";
  const fs::path b = fs::temp_directory_path() / "rnode_harness_report_b.csv";
  write_report_csv(rows, a);
  write_report_csv(rows, b);
  const std::string ta = slurp(a);
  CHECK(ta.rfind("model,eps_norm,avg_cost,accuracy,n_samples,seed\n", 0) == 0);
  CHECK(ta.find("robust,") != std::string::npos);
  CHECK(ta == slurp(b));
  fs::remove(a);
  fs::remove(b);
}

}  // TEST_SUITE
