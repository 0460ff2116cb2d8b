#pragma once

#include "dtgan/baseline_gan.hpp"
#include "dtgan/config.hpp"
#include "dtgan/metrics.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dtgan {

enum class Regime { Gmm, Heavy, Block, Synthesis, Rate, Saddle };
enum class ModelSelector { DtGan, Gan, Both };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& name);
std::string to_string(ModelSelector m);
ModelSelector model_selector_from_string(const std::string& name);

/// Everything one experiment needs: the data regime and its parameter list,
/// which models to train, dimensions, training budgets for both models
/// (kept equal where parity demands it), seeds, and the output directory.
struct ExperimentConfig {
  Regime regime = Regime::Gmm;
  ModelSelector model = ModelSelector::Both;
  std::vector<double> regime_params = {1.5, 2.5, 5.0};
  double heavy_base_separation = 2.5;
  double heavy_noise_scale = 1.0;

  int data_dim = 2;
  int atom_count = 4;
  int sparsity = 1;
  int transform_rows = -1;  // -1 means data_dim
  int train_samples = 5000;
  int eval_generated_samples = 10000;
  double min_singular = 0.5;  // synthesis ground-truth conditioning

  GameConfig game = GameConfig::defaults_for(4);
  TrainConfig train;
  GanConfig gan;
  RateExperimentConfig rate;
  int saddle_grid_resolution = 601;

  std::string output_path;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  void validate() const;
  static ExperimentConfig from_doc(const ConfigDoc& doc);
  ConfigDoc to_doc() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&);
};

bool operator==(const GameConfig& a, const GameConfig& b);
bool operator==(const TrainConfig& a, const TrainConfig& b);
bool operator==(const GanConfig& a, const GanConfig& b);
bool operator==(const RateExperimentConfig& a, const RateExperimentConfig& b);

/// One aggregated table cell: mean and deviation of the recovery error over
/// seeds, plus the budget actually used so parity can be audited.
struct ResultRow {
  double regime_param = 0.0;
  std::string model;
  double err_mean = 0.0;
  double err_std = 0.0;
  int n_seeds = 0;
  int iterations = 0;
  int batch_size = 0;
  int divergent_runs = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  /// CSV with header regime_param,model,err_mean,err_std,n_seeds.
  std::string to_csv() const;

  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

/// Runs each (regime parameter, model, seed) cell: generates data, trains,
/// draws eval_generated_samples generator outputs, computes the recovery
/// error, and aggregates over seeds. Both models see the same data per seed
/// and identical iteration/batch budgets. A divergent run contributes the
/// error of its last finite parameters and is counted in the row. Cells run
/// on up to `threads` workers; the table does not depend on thread count.
/// Rejects rate and saddle regimes, which are handled by verify().
ResultTable run_experiment(const ExperimentConfig& config, int threads = 1);

/// Canned configurations for the three benchmark tables.
ExperimentConfig table1_config();
ExperimentConfig table2_config();
ExperimentConfig table3_config();

struct TableBundle {
  ResultTable table1, table2, table3;
  std::string summary_json;
};

/// Runs the three canned tables, writes table{1,2,3}.csv, metrics.jsonl and
/// summary.json under out_dir, and flags the per-table acceptance checks in
/// the summary.
TableBundle reproduce_tables(const std::string& out_dir, int threads = 1);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string details_json;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
  std::string to_json() const;
};

/// Property-suite command: analytic-versus-finite-difference gradient
/// checks, the 1-D grid-oracle saddle agreement, the identifiability run,
/// and the finite-sample rate fit. Writes verify.json under out_dir.
VerifyReport verify(const std::string& out_dir, int threads = 1);

/// The canned identifiability experiment: 2x2 ground truth with 1-sparse
/// latents, a 16-row transform, a slow dictionary with tail averaging.
struct IdentifiabilitySetup {
  TrainConfig train;
  GameConfig game = GameConfig::defaults_for(2);
  int transform_rows = 16;
  int data_samples = 1000;
  double min_singular = 0.5;
};
IdentifiabilitySetup identifiability_setup();

/// The dictionary-player equivalent of gan_sample: latent draws pushed
/// through D. Used for recovery-error evaluation.
Eigen::MatrixXd dictionary_sample_matrix(const Dictionary& d, const LatentSpec& spec, int count,
                                         RngState& rng);

}  // namespace dtgan
