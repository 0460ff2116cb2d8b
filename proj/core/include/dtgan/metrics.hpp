#pragma once

#include "dtgan/datagen.hpp"
#include "dtgan/objective.hpp"
#include "dtgan/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dtgan {

/// Best column matching between a learned and a reference dictionary.
/// permutation[j] is the learned column matched to reference column j and
/// signs[j] the orientation that makes the matched inner product
/// nonnegative. residual = |Dhat_normalized - D0 Pi Sigma|_F.
struct MatchResult {
  std::vector<int> permutation;
  std::vector<int> signs;
  double residual = 0.0;
};

/// Least-squares power-law fit of gap against sample size in log-log space.
struct RateFit {
  std::vector<double> sample_sizes;
  std::vector<double> gaps;
  double fitted_exponent = 0.0;
  double fitted_log_constant = 0.0;
};

/// Euclidean distance between the two sample means.
double recovery_error(const std::vector<Eigen::VectorXd>& generated,
                      const std::vector<Eigen::VectorXd>& real);

/// Same metric on column-matrix batches.
double recovery_error(const Eigen::MatrixXd& generated, const Eigen::MatrixXd& real);

/// Matches column-normalized d_hat columns to d0 columns by maximizing the
/// total absolute inner product (optimal assignment, not greedy), then picks
/// signs and reports the Frobenius residual within the permutation-sign
/// equivalence class.
MatchResult dictionary_recovery(const Dictionary& d_hat, const Dictionary& d0);

/// Probe-based surrogate for analysis-synthesis alignment. For n_probe
/// sampled supports S it forms the span of the active dictionary columns,
/// labels the transform rows whose projection onto that span is at or below
/// the median as orthogonal-facing, and averages their squared response to
/// a random unit probe drawn inside the orthogonal complement. Supports
/// whose complement is empty contribute nothing; the residual of an
/// all-empty run is 0.
double alignment_residual(const Dictionary& d, const Transform& t, const LatentSpec& spec,
                          int n_probe, RngState& rng);

struct SaddlePoint {
  Dictionary dictionary;
  Transform transform;
  double value = 0.0;
  double dict_spacing = 0.0;   // grid step between dictionary entries
  double angle_spacing = 0.0;  // grid step between row angles
};

/// Exhaustive minimax over a feasible grid: dictionary entries on a uniform
/// grid inside the Frobenius ball, transform rows on the unit circle (the
/// two unit points when n = 1). Supports square games with n = k = m in
/// {1, 2}; throws when the grid would exceed 1e6 point pairs.
SaddlePoint bruteforce_saddle(int n, int k, int m, const SampleBatch& batch,
                              const GameConfig& cfg, int grid_resolution);

/// Fits log(gap) = fitted_log_constant + fitted_exponent * log(N).
/// Requires at least three strictly increasing sizes and positive gaps.
RateFit fit_power_law(const std::vector<double>& sample_sizes, const std::vector<double>& gaps);

/// Configuration of the finite-sample rate experiment on exact synthesis
/// data. For each sample size N a model is trained on N samples, and the
/// objective-value gap between the N-sample game and a reference game built
/// from ref_multiple times the largest size is evaluated at the trained
/// players (both evaluations share one latent batch, so optimizer error
/// cancels and the gap isolates the data-sampling deviation). Gaps are
/// averaged over trials and fit with a power law in N.
struct RateExperimentConfig {
  std::vector<int> sample_sizes = {100, 400, 1600, 6400};
  int trials = 5;
  int ref_multiple = 10;
  int eval_latent_count = 20000;
  int ambient_dim = 2;
  int atom_count = 2;
  int sparsity = 1;
  int transform_rows = 8;
  double min_singular = 0.5;
  GameConfig game = GameConfig::defaults_for(2);
  TrainConfig train_template = rate_train_template();
  std::uint64_t seed = 2024;

  static TrainConfig rate_train_template();
};

struct RateExperimentResult {
  RateFit fit;
  std::vector<int> excluded_trials;  // divergent runs per sample size
};

RateExperimentResult rate_experiment(const RateExperimentConfig& cfg);

/// Minimum-cost assignment on a square cost matrix; returns the column
/// assigned to each row. O(k^3) shortest augmenting paths.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// JSON record {"metric": name, "value": v, "config_hash": h, "seed": s}.
std::string metric_record_json(const std::string& name, double value,
                               const std::string& config_hash, std::uint64_t seed);

/// FNV-1a hex digest used to tag metric records with their configuration.
std::string config_hash_hex(const std::string& serialized_config);

}  // namespace dtgan
