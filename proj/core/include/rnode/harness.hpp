#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rnode/adversary.hpp"
#include "rnode/model.hpp"
#include "rnode/trainer.hpp"

namespace rnode {

/* ---- disk classification task ----------------------------------------
 * Inputs uniform on [-bound, bound]^2; label +1 inside the centered disk of
 * the given radius (boundary inclusive), -1 outside.  Points are pairwise
 * distinct and the sequence is a pure function of the seed.  */
struct DatasetParams {
  int count = 20;
  std::uint64_t seed = 0;
  double radius = 0.5;
  double bound = 1.0;
};

double disk_label(double x1, double x2, double radius);
std::vector<LabeledPoint> generate_dataset(const DatasetParams& params);

// CSV with header "x1,x2,y"; values in shortest round-trip form
void write_dataset_csv(const std::vector<LabeledPoint>& data,
                       const std::filesystem::path& path);
std::vector<LabeledPoint> read_dataset_csv(const std::filesystem::path& path);

/* Random disturbance with entries drawn uniform in [-1, 1] and rescaled so
 * the sup norm equals the magnitude exactly; zero grid for magnitude 0.  */
Disturbance sample_disturbance(double magnitude, int num_steps, int control_dim,
                               std::uint64_t seed);

/* ---- disturbance sweep -------------------------------------------------- */
struct EvalOptions {
  std::vector<double> eps_grid;     // ascending sup-norm magnitudes
  int samples_per_magnitude = 16;   // ignored in adversarial mode (one per point)
  std::uint64_t seed = 0;
  bool adversarial = false;         // worst-case direction instead of random draws
  AdversaryConfig adversary;        // penalty weight used by adversarial mode
};

struct EvalRow {
  double eps_norm;
  double avg_cost;
  double accuracy;
  int num_samples;
  std::uint64_t seed;
  long num_correct = 0;
  long num_total = 0;
  long num_diverged = 0;  // samples excluded from the averages
};

// one prediction record, for consistency checks between detail and aggregate
struct EvalDetail {
  struct Cell {
    int magnitude_index;
    int sample_index;
    int point_index;
    double prediction;
    bool correct;
  };
  std::vector<Cell> cells;
};

/* Deterministic in (options.seed, grid order): per-cell RNG streams are
 * derived by index, and the reduction runs in a fixed order.  A prediction
 * counts as correct iff it has the label's strict sign; ties (exact zero)
 * count as misclassified.  */
std::vector<EvalRow> evaluate(const ControlSignal& u, const std::vector<LabeledPoint>& test,
                              const EvalOptions& opts, const ModelConfig& cfg,
                              EvalDetail* detail = nullptr);

// CSV with header "model,eps_norm,avg_cost,accuracy,n_samples,seed"
void write_report_csv(const std::vector<std::pair<std::string, EvalRow>>& rows,
                      const std::filesystem::path& path);

std::vector<double> parse_eps_grid(const std::string& text);

/* ---- run configuration ---------------------------------------------------
 * Flat "key = value" text file ('#' comments).  Keys mirror the ModelConfig,
 * AdversaryConfig and TrainConfig fields; an unknown key is an error.  */
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::filesystem::path& path);
// single "key = value" assignment, same key set as the file (CLI overrides)
void apply_config_override(RunConfig& cfg, const std::string& key, const std::string& value);

// quick built-in oracle/property suites; prints one line per check
bool run_selftest(std::ostream& out);

}  // namespace rnode
