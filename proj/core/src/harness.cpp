#include "rnode/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

#include "rnode/io.hpp"
#include "rnode/rng.hpp"

namespace rnode {

double disk_label(double x1, double x2, double radius) {
  return (x1 * x1 + x2 * x2 <= radius * radius) ? 1.0 : -1.0;
}

std::vector<LabeledPoint> generate_dataset(const DatasetParams& params) {
  if (params.count <= 0) throw config_error("dataset: count must be positive");
  if (!(params.radius > 0.0) || !(params.bound > 0.0))
    throw config_error("dataset: radius and bound must be positive");
  Rng rng(params.seed);
  std::vector<LabeledPoint> out;
  out.reserve(static_cast<std::size_t>(params.count));
  std::set<std::pair<double, double>> seen;
  while (out.size() < static_cast<std::size_t>(params.count)) {
    const double x1 = rng.uniform(-params.bound, params.bound);
    const double x2 = rng.uniform(-params.bound, params.bound);
    if (!seen.insert({x1, x2}).second) continue;  // resample exact duplicates
    LabeledPoint pt;
    pt.x = Eigen::Vector2d(x1, x2);
    pt.y = Eigen::VectorXd::Constant(1, disk_label(x1, x2, params.radius));
    out.push_back(std::move(pt));
  }
  return out;
}

void write_dataset_csv(const std::vector<LabeledPoint>& data,
                       const std::filesystem::path& path) {
  std::string out = "x1,x2,y\n";
  for (const LabeledPoint& pt : data) {
    if (pt.x.size() != 2 || pt.y.size() != 1)
      throw config_error("dataset csv: expects 2-d inputs with scalar labels");
    out += format_double(pt.x(0)) + ',' + format_double(pt.x(1)) + ',' +
           format_double(pt.y(0)) + '\n';
  }
  write_file_atomic(path, out);
}

std::vector<LabeledPoint> read_dataset_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "x1,x2,y")
    throw config_error("dataset csv: bad header in " + path.string());
  std::vector<LabeledPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw config_error("dataset csv: malformed row '" + line + "'");
    LabeledPoint pt;
    pt.x = Eigen::Vector2d(parse_double(line.substr(0, c1)),
                           parse_double(line.substr(c1 + 1, c2 - c1 - 1)));
    pt.y = Eigen::VectorXd::Constant(1, parse_double(line.substr(c2 + 1)));
    out.push_back(std::move(pt));
  }
  if (out.empty()) throw config_error("dataset csv: no rows in " + path.string());
  return out;
}

Disturbance sample_disturbance(double magnitude, int num_steps, int control_dim,
                               std::uint64_t seed) {
  if (!(magnitude >= 0.0)) throw config_error("disturbance: magnitude must be >= 0");
  if (num_steps <= 0 || control_dim <= 0)
    throw config_error("disturbance: grid shape must be positive");
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(num_steps, control_dim);
  if (magnitude == 0.0) return Disturbance(std::move(e), 0.0);
  Rng rng(seed);
  for (Eigen::Index k = 0; k < e.rows(); ++k)
    for (Eigen::Index c = 0; c < e.cols(); ++c) e(k, c) = rng.uniform(-1.0, 1.0);
  /* divide by the current sup norm before scaling so the maximal entry maps
   * to exactly +-magnitude */
  const double sup = e.cwiseAbs().maxCoeff();
  e = (e / sup) * magnitude;
  return Disturbance(std::move(e), magnitude);
}

std::vector<EvalRow> evaluate(const ControlSignal& u, const std::vector<LabeledPoint>& test,
                              const EvalOptions& opts, const ModelConfig& cfg,
                              EvalDetail* detail) {
  cfg.validate();
  if (test.empty()) throw config_error("evaluate: test set is empty");
  if (opts.eps_grid.empty()) throw config_error("evaluate: magnitude grid is empty");
  for (std::size_t i = 0; i < opts.eps_grid.size(); ++i) {
    if (!(opts.eps_grid[i] >= 0.0))
      throw config_error("evaluate: magnitudes must be >= 0");
    if (i > 0 && !(opts.eps_grid[i] > opts.eps_grid[i - 1]))
      throw config_error("evaluate: magnitude grid must be strictly ascending");
  }
  if (!opts.adversarial && opts.samples_per_magnitude <= 0)
    throw config_error("evaluate: samples_per_magnitude must be positive");

  const int N = cfg.num_steps, p = cfg.control_dim();
  std::vector<EvalRow> rows;
  rows.reserve(opts.eps_grid.size());

  auto tally = [&](EvalRow& row, double& cost_sum, int mi, int si, int pi,
                   const Eigen::VectorXd& pred, const LabeledPoint& pt) {
    cost_sum += (pred - pt.y).squaredNorm();
    const bool correct = pt.y(0) * pred(0) > 0.0;  // exact ties count as wrong
    if (correct) ++row.num_correct;
    ++row.num_total;
    if (detail)
      detail->cells.push_back({mi, si, pi, pred(0), correct});
  };

  for (std::size_t mi = 0; mi < opts.eps_grid.size(); ++mi) {
    const double mag = opts.eps_grid[mi];
    EvalRow row{};
    row.eps_norm = mag;
    row.seed = opts.seed;
    double cost_sum = 0.0;

    if (opts.adversarial) {
      row.num_samples = 1;
      for (std::size_t pi = 0; pi < test.size(); ++pi) {
        const LabeledPoint& pt = test[pi];
        try {
          Disturbance eps = Disturbance::zero(N, p, mag);
          if (mag > 0.0) {
            const SensitivityMatrix S = compute_sensitivity(u, pt.x, cfg);
            AdversaryConfig acfg = opts.adversary;
            acfg.radius = mag;
            /* keep the solve feasible for arbitrary checkpoints: lift the
             * penalty just above the squared sensitivity norm if needed */
            acfg.penalty_weight =
                std::max(acfg.penalty_weight, 1.1 * spectral_norm_sq(S));
            eps = worst_case_disturbance(S, residual(u, pt, cfg), acfg);
          }
          const Eigen::VectorXd pred = perturbed_predict(u, eps, pt.x, cfg);
          tally(row, cost_sum, static_cast<int>(mi), 0, static_cast<int>(pi), pred, pt);
        } catch (const numeric_error&) {
          ++row.num_diverged;
        }
      }
    } else {
      row.num_samples = opts.samples_per_magnitude;
      for (int si = 0; si < opts.samples_per_magnitude; ++si) {
        const Disturbance eps =
            sample_disturbance(mag, N, p, mix_seed(opts.seed, mi, static_cast<std::uint64_t>(si)));
        for (std::size_t pi = 0; pi < test.size(); ++pi) {
          const LabeledPoint& pt = test[pi];
          try {
            const Eigen::VectorXd pred = perturbed_predict(u, eps, pt.x, cfg);
            tally(row, cost_sum, static_cast<int>(mi), si, static_cast<int>(pi), pred, pt);
          } catch (const numeric_error&) {
            ++row.num_diverged;
          }
        }
      }
    }

    if (row.num_total == 0)
      throw numeric_error("evaluate: every sample diverged at magnitude " +
                          std::to_string(mag));
    row.avg_cost = cost_sum / static_cast<double>(row.num_total);
    row.accuracy = static_cast<double>(row.num_correct) / static_cast<double>(row.num_total);
    rows.push_back(row);
  }
  return rows;
}

void write_report_csv(const std::vector<std::pair<std::string, EvalRow>>& rows,
                      const std::filesystem::path& path) {
  std::string out = "model,eps_norm,avg_cost,accuracy,n_samples,seed\n";
  for (const auto& [model, r] : rows) {
    out += model + ',' + format_double(r.eps_norm) + ',' + format_double(r.avg_cost) +
           ',' + format_double(r.accuracy) + ',' + std::to_string(r.num_samples) + ',' +
           std::to_string(r.seed) + '\n';
  }
  write_file_atomic(path, out);
}

std::vector<double> parse_eps_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos)
      throw config_error("eps grid: expected start:step:end, got '" + text + "'");
    const double start = parse_double(text.substr(0, c1));
    const double step = parse_double(text.substr(c1 + 1, c2 - c1 - 1));
    const double end = parse_double(text.substr(c2 + 1));
    if (!(step > 0.0)) throw config_error("eps grid: step must be positive");
    for (int k = 0;; ++k) {
      const double v = start + k * step;
      if (v > end + step * 1e-9) break;
      grid.push_back(v);
    }
  } else {
    std::size_t at = 0;
    while (at <= text.size()) {
      const auto comma = text.find(',', at);
      const std::string tok =
          text.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
      grid.push_back(parse_double(tok));
      if (comma == std::string::npos) break;
      at = comma + 1;
    }
  }
  if (grid.empty()) throw config_error("eps grid: empty");
  return grid;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw config_error("config: expected a boolean, got '" + s + "'");
}

}  // namespace

void apply_config_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  // model
  if (key == "state_dim") cfg.model.state_dim = static_cast<int>(parse_long(value));
  else if (key == "input_dim") cfg.model.input_dim = static_cast<int>(parse_long(value));
  else if (key == "output_dim") cfg.model.output_dim = static_cast<int>(parse_long(value));
  else if (key == "num_steps") cfg.model.num_steps = static_cast<int>(parse_long(value));
  else if (key == "dt") cfg.model.dt = parse_double(value);
  else if (key == "readout_index") cfg.model.readout_index = static_cast<int>(parse_long(value));
  // adversary
  else if (key == "penalty_weight") cfg.train.adversary.penalty_weight = parse_double(value);
  else if (key == "radius") cfg.train.adversary.radius = parse_double(value);
  else if (key == "zero_threshold") cfg.train.adversary.zero_threshold = parse_double(value);
  // trainer
  else if (key == "learning_rate") cfg.train.learning_rate = parse_double(value);
  else if (key == "lr_decay") cfg.train.lr_decay = parse_double(value);
  else if (key == "weight_decay") cfg.train.weight_decay = parse_double(value);
  else if (key == "inner_tol") cfg.train.inner_tol = parse_double(value);
  else if (key == "robust_tol") cfg.train.robust_tol = parse_double(value);
  else if (key == "max_inner_iters") cfg.train.max_inner_iters = static_cast<int>(parse_long(value));
  else if (key == "max_outer_passes") cfg.train.max_outer_passes = static_cast<int>(parse_long(value));
  else if (key == "max_standard_iters") cfg.train.max_standard_iters = static_cast<int>(parse_long(value));
  else if (key == "max_backtracks") cfg.train.max_backtracks = static_cast<int>(parse_long(value));
  else if (key == "seed") cfg.train.seed = static_cast<std::uint64_t>(parse_long(value));
  else if (key == "init_scale") cfg.train.init_scale = parse_double(value);
  else if (key == "point_order") cfg.train.point_order = value;
  else if (key == "abort_on_failure") cfg.train.abort_on_failure = parse_bool(value);
  else throw config_error("config: unknown key '" + key + "'");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config: line " + std::to_string(lineno) +
                         " is not a key = value assignment");
    apply_config_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  return parse_config_text(read_file(path));
}

}  // namespace rnode
