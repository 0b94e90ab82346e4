// Command-line driver for the robust neural-ODE training library.
//
// Subcommands:
//   gen-data  — sample a labeled disk-classification dataset to CSV
//   train     — fit a control signal (robust or standard mode) to a dataset
//   eval      — sweep disturbance magnitudes for one checkpoint
//   sweep     — evaluate a robust and a standard checkpoint side by side
//   selftest  — run the built-in oracle/property checks
//
// All failures print a single "error: ..." line on stderr and exit nonzero,
// so the binary is safe to drive from scripts.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "rnode/common.hpp"
#include "rnode/harness.hpp"
#include "rnode/model.hpp"
#include "rnode/trainer.hpp"

namespace {

/* Shared --config/--set plumbing: file first, then overrides in order, so a
 * --set on the command line always wins over the file.  */
struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;

  rnode::RunConfig resolve() const {
    rnode::RunConfig cfg;
    if (!config_path.empty()) cfg = rnode::load_config_file(config_path);
    for (const std::string& assignment : overrides) {
      const auto eq = assignment.find('=');
      if (eq == std::string::npos)
        throw rnode::config_error("--set expects key=value, got \"" + assignment + "\"");
      std::string key = assignment.substr(0, eq);
      std::string value = assignment.substr(eq + 1);
      // trim ASCII whitespace on both pieces
      auto trim = [](std::string& s) {
        const char* ws = " \t";
        const auto a = s.find_first_not_of(ws);
        const auto b = s.find_last_not_of(ws);
        s = (a == std::string::npos) ? std::string{} : s.substr(a, b - a + 1);
      };
      trim(key);
      trim(value);
      rnode::apply_config_override(cfg, key, value);
    }
    return cfg;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--set", overrides, "override one key (key=value); repeatable");
  }
};

void print_eval_table(const std::vector<std::pair<std::string, rnode::EvalRow>>& rows) {
  std::cout << "model       eps     avg_cost    accuracy  samples  diverged\n";
  for (const auto& [tag, row] : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %5.3f  %10.6f  %9.4f  %7d  %8ld\n", tag.c_str(),
                  row.eps_norm, row.avg_cost, row.accuracy, row.num_samples, row.num_diverged);
    std::cout << line;
  }
}

/* Evaluate one checkpoint over the grid; model geometry comes from the
 * checkpoint sidecar when available so a resized model round-trips.  */
std::vector<std::pair<std::string, rnode::EvalRow>> eval_checkpoint(
    const std::filesystem::path& ckpt_path, const std::vector<rnode::LabeledPoint>& test,
    rnode::EvalOptions opts, const rnode::RunConfig& base, const std::string& tag) {
  const rnode::TrainCheckpoint ck = rnode::load_train_checkpoint(ckpt_path);
  rnode::ModelConfig mcfg = ck.model.value_or(base.model);
  mcfg.validate();
  if (ck.u.control_dim() != mcfg.control_dim())
    throw rnode::config_error("checkpoint " + ckpt_path.string() +
                              " does not match the model geometry");
  std::string label = tag.empty() ? (ck.mode == "unknown" ? "model" : ck.mode) : tag;
  std::vector<std::pair<std::string, rnode::EvalRow>> out;
  for (const rnode::EvalRow& row : rnode::evaluate(ck.u, test, opts, mcfg))
    out.emplace_back(label, row);
  return out;
}

int cmd_gen_data(const std::string& out_path, int count, std::uint64_t seed, double radius,
                 double bound) {
  rnode::DatasetParams params{count, seed, radius, bound};
  const std::vector<rnode::LabeledPoint> data = rnode::generate_dataset(params);
  rnode::write_dataset_csv(data, out_path);
  int positive = 0;
  for (const rnode::LabeledPoint& pt : data)
    if (pt.y(0) > 0) ++positive;
  std::cout << "wrote " << data.size() << " points (" << positive << " inside the disk) to "
            << out_path << "\n";
  return 0;
}

int cmd_train(const std::string& mode, const std::string& data_path, const std::string& out_path,
              std::uint64_t seed, const ConfigArgs& cfg_args, const std::string& history_path,
              const std::string& init_path) {
  rnode::RunConfig cfg = cfg_args.resolve();
  cfg.train.seed = seed;
  const std::vector<rnode::LabeledPoint> data = rnode::read_dataset_csv(data_path);

  std::optional<rnode::ControlSignal> warm;
  if (!init_path.empty()) {
    if (mode != "standard")
      throw rnode::config_error("train: --init is only supported with --mode standard");
    warm = rnode::load_train_checkpoint(init_path).u;
  }
  rnode::TrainState state =
      (mode == "robust")
          ? rnode::train_robust(data, cfg.model, cfg.train)
          : rnode::train_standard(data, cfg.model, cfg.train, warm ? &*warm : nullptr);
  rnode::save_train_checkpoint(state, cfg.model, cfg.train, mode, out_path);
  if (!history_path.empty()) rnode::write_history_csv(state.history, history_path);

  std::cout << "mode=" << mode << "  points=" << data.size()
            << "  memorized=" << state.memorized.size() << "  iterations=" << state.history.size()
            << "\n";
  if (!state.failures.empty()) {
    std::cout << "unmet points:";
    for (const rnode::FailureRecord& f : state.failures)
      std::cout << " #" << f.point_index << " (cost " << f.final_cost << ")";
    std::cout << "\n";
  }
  std::cout << "checkpoint written to " << out_path << "\n";
  return state.failures.empty() ? 0 : 2;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& out_path, std::uint64_t seed, const std::string& grid_text,
             int samples, bool adversarial, const std::string& tag, const ConfigArgs& cfg_args) {
  rnode::RunConfig cfg = cfg_args.resolve();
  const std::vector<rnode::LabeledPoint> test = rnode::read_dataset_csv(data_path);

  rnode::EvalOptions opts;
  opts.eps_grid = rnode::parse_eps_grid(grid_text);
  opts.samples_per_magnitude = samples;
  opts.seed = seed;
  opts.adversarial = adversarial;
  opts.adversary = cfg.train.adversary;

  const auto rows = eval_checkpoint(ckpt_path, test, opts, cfg, tag);
  if (!out_path.empty()) rnode::write_report_csv(rows, out_path);
  print_eval_table(rows);
  if (!out_path.empty()) std::cout << "report written to " << out_path << "\n";
  return 0;
}

int cmd_sweep(const std::string& robust_path, const std::string& standard_path,
              const std::string& data_path, const std::string& out_path, std::uint64_t seed,
              const std::string& grid_text, int samples, bool adversarial,
              const ConfigArgs& cfg_args) {
  rnode::RunConfig cfg = cfg_args.resolve();
  const std::vector<rnode::LabeledPoint> test = rnode::read_dataset_csv(data_path);

  rnode::EvalOptions opts;
  opts.eps_grid = rnode::parse_eps_grid(grid_text);
  opts.samples_per_magnitude = samples;
  opts.seed = seed;
  opts.adversarial = adversarial;
  opts.adversary = cfg.train.adversary;

  auto rows = eval_checkpoint(robust_path, test, opts, cfg, "robust");
  auto std_rows = eval_checkpoint(standard_path, test, opts, cfg, "standard");
  rows.insert(rows.end(), std_rows.begin(), std_rows.end());

  rnode::write_report_csv(rows, out_path);
  print_eval_table(rows);
  std::cout << "report written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust training and evaluation for control-parameterized neural ODEs"};
  app.require_subcommand(1);

  // ---- gen-data ----
  std::string gd_out;
  int gd_count = 20;
  std::uint64_t gd_seed = 0;
  double gd_radius = 0.5, gd_bound = 1.0;
  CLI::App* gen = app.add_subcommand("gen-data", "sample a labeled disk dataset to CSV");
  gen->add_option("--out", gd_out, "output CSV path")->required();
  gen->add_option("--q", gd_count, "number of points")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gd_seed, "sampling seed")->required();
  gen->add_option("--radius", gd_radius, "disk radius");
  gen->add_option("--bound", gd_bound, "half-width of the sampling square");

  // ---- train ----
  std::string tr_mode = "robust", tr_data, tr_out, tr_history, tr_init;
  std::uint64_t tr_seed = 0;
  ConfigArgs tr_cfg;
  CLI::App* train = app.add_subcommand("train", "fit a control signal to a dataset");
  train->add_option("--mode", tr_mode, "training mode")
      ->check(CLI::IsMember({"robust", "standard"}));
  train->add_option("--data", tr_data, "training CSV")->required();
  train->add_option("--out", tr_out, "checkpoint output path")->required();
  train->add_option("--seed", tr_seed, "initialization seed")->required();
  train->add_option("--history", tr_history, "per-iteration history CSV (optional)");
  train->add_option("--init", tr_init,
                    "checkpoint to continue from instead of a random control (standard mode)");
  tr_cfg.attach(train);

  // ---- eval ----
  std::string ev_ckpt, ev_data, ev_out, ev_grid = "0:0.02:0.4", ev_tag;
  std::uint64_t ev_seed = 0;
  int ev_samples = 16;
  bool ev_adv = false;
  ConfigArgs ev_cfg;
  CLI::App* eval_cmd = app.add_subcommand("eval", "disturbance sweep for one checkpoint");
  eval_cmd->add_option("--checkpoint", ev_ckpt, "trained checkpoint")->required();
  eval_cmd->add_option("--data", ev_data, "test CSV")->required();
  eval_cmd->add_option("--out", ev_out, "report CSV path (optional)");
  eval_cmd->add_option("--seed", ev_seed, "disturbance sampling seed")->required();
  eval_cmd->add_option("--eps-grid", ev_grid, "magnitudes: start:step:end or comma list");
  eval_cmd->add_option("--samples", ev_samples, "random draws per magnitude")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--adversarial", ev_adv, "worst-case directions instead of random draws");
  eval_cmd->add_option("--model-tag", ev_tag, "model column value in the report");
  ev_cfg.attach(eval_cmd);

  // ---- sweep ----
  std::string sw_robust, sw_standard, sw_data, sw_out, sw_grid = "0:0.02:0.4";
  std::uint64_t sw_seed = 0;
  int sw_samples = 16;
  bool sw_adv = false;
  ConfigArgs sw_cfg;
  CLI::App* sweep = app.add_subcommand("sweep", "compare robust and standard checkpoints");
  sweep->add_option("--robust", sw_robust, "robust checkpoint")->required();
  sweep->add_option("--standard", sw_standard, "standard checkpoint")->required();
  sweep->add_option("--data", sw_data, "test CSV")->required();
  sweep->add_option("--out", sw_out, "report CSV path")->required();
  sweep->add_option("--seed", sw_seed, "disturbance sampling seed")->required();
  sweep->add_option("--eps-grid", sw_grid, "magnitudes: start:step:end or comma list");
  sweep->add_option("--samples", sw_samples, "random draws per magnitude")
      ->check(CLI::PositiveNumber);
  sweep->add_flag("--adversarial", sw_adv, "worst-case directions instead of random draws");
  sw_cfg.attach(sweep);

  // ---- selftest ----
  CLI::App* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(gd_out, gd_count, gd_seed, gd_radius, gd_bound);
    if (train->parsed())
      return cmd_train(tr_mode, tr_data, tr_out, tr_seed, tr_cfg, tr_history, tr_init);
    if (eval_cmd->parsed())
      return cmd_eval(ev_ckpt, ev_data, ev_out, ev_seed, ev_grid, ev_samples, ev_adv, ev_tag,
                      ev_cfg);
    if (sweep->parsed())
      return cmd_sweep(sw_robust, sw_standard, sw_data, sw_out, sw_seed, sw_grid, sw_samples,
                       sw_adv, sw_cfg);
    if (selftest->parsed()) return rnode::run_selftest(std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
