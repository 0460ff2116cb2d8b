#pragma once

#include "dtgan/core.hpp"
#include "dtgan/objective.hpp"
#include "dtgan/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace dtgan {

/// Knobs of the alternating projected-(sub)gradient solver. All counts must
/// be >= 1 and step sizes > 0; the checked constructor and validate() both
/// enforce this.
struct TrainConfig {
  int outer_iters = 2000;
  int disc_steps_per_gen_step = 5;
  double step_size_D = 1e-2;
  double step_size_T = 1e-2;
  int batch_size = 128;  // fresh latent draws per outer iteration
  std::uint64_t seed = 0;
  bool project_rows_each_step = true;
  int log_every = 100;
  // When positive, the returned dictionary is the projected average of the
  // iterates over the trailing fraction of the run. Constant-step
  // subgradient play orbits the equilibrium; averaging the tail recovers
  // its center. 0 returns the final iterate.
  double averaging_tail_fraction = 0.0;

  TrainConfig() = default;
  TrainConfig(int outer, int disc_steps, double lr_d, double lr_t, int batch,
              std::uint64_t seed_value, bool project_rows, int log_stride);
  void validate() const;
};

struct TrajectoryPoint {
  int iteration = 0;
  ObjectiveValue objective;
  double frob_D = 0.0;
  double max_row_dev = 0.0;
  double nash_gap = 0.0;
  bool has_nash_gap = false;
};

struct TrainTrajectory {
  std::vector<TrajectoryPoint> points;
};

struct TrainResult {
  Dictionary dictionary;
  Transform transform;
  TrainTrajectory trajectory;
};

/// Random feasible starting players: dictionary columns are standard normal
/// draws, column-normalized, then Frobenius-projected; transform rows are
/// normalized normal draws. Deterministic per seed.
std::pair<Dictionary, Transform> init_players(int n, int k, int m, const GameConfig& cfg,
                                              std::uint64_t seed);

/// Runs the alternating game on a fixed data set (columns of `data`):
/// each round takes disc_steps_per_gen_step ascent steps on T followed by
/// one projected descent step on D, with a fresh latent batch per round.
/// `transform_rows` < 1 means m = n. Throws DivergenceError if the
/// objective or a player goes non-finite.
TrainResult train(const Eigen::MatrixXd& data, const LatentSpec& latent_spec,
                  const GameConfig& game, const TrainConfig& tc, int transform_rows = -1);

/// The exact starting players a train() call with this configuration would
/// use, without running any steps.
std::pair<Dictionary, Transform> train_initial_players(const Eigen::MatrixXd& data,
                                                       const LatentSpec& latent_spec,
                                                       const GameConfig& game,
                                                       const TrainConfig& tc,
                                                       int transform_rows = -1);

/// Projected (sub)gradient ascent on T with D fixed; returns the best
/// iterate by objective value (the start counts as an iterate).
Transform solve_inner_max(const Dictionary& d, const Transform& t0, const SampleBatch& batch,
                          const GameConfig& cfg, int steps, double step_size,
                          bool project_rows = true);

/// Projected (sub)gradient descent on D with T fixed; best iterate.
Dictionary solve_inner_min(const Transform& t, const Dictionary& d0, const SampleBatch& batch,
                           const GameConfig& cfg, int steps, double step_size);

/// CSV rows (iteration,total,real_term,fake_term,reg_term,frob_D,max_row_dev).
void write_trajectory_csv(std::ostream& out, const TrainTrajectory& trajectory);

}  // namespace dtgan
