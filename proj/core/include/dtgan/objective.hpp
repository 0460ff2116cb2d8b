#pragma once

#include "dtgan/core.hpp"

#include <vector>

namespace dtgan {

/// A fixed evaluation batch: real samples {x_i} as columns of `data` and
/// latent draws {z_i}. The dense latent matrix is cached at construction so
/// batch terms reduce to matrix products with a fixed summation order.
struct SampleBatch {
  Eigen::MatrixXd data;            // n x N_x
  std::vector<SparseLatent> latents;
  Eigen::MatrixXd latent_matrix;   // k x N_z

  SampleBatch() = default;
  SampleBatch(Eigen::MatrixXd data_columns, std::vector<SparseLatent> latent_draws);

  static SampleBatch from_vectors(const std::vector<Eigen::VectorXd>& data_samples,
                                  std::vector<SparseLatent> latent_draws);

  int data_count() const { return static_cast<int>(data.cols()); }
  int latent_count() const { return static_cast<int>(latents.size()); }
  int signal_dim() const { return static_cast<int>(data.rows()); }
};

/// Value of the empirical game objective together with its three summands:
/// total = real_energy_term - fake_energy_term + lambda * reg_term.
struct ObjectiveValue {
  double total = 0.0;
  double real_energy_term = 0.0;
  double fake_energy_term = 0.0;
  double reg_term = 0.0;

  bool is_finite() const {
    return std::isfinite(total) && std::isfinite(real_energy_term) &&
           std::isfinite(fake_energy_term) && std::isfinite(reg_term);
  }
};

/// Mean transform energy of the real batch, minus mean transform energy of
/// the synthesized batch, plus lambda times the row penalty.
ObjectiveValue empirical_objective(const Dictionary& d, const Transform& t,
                                   const SampleBatch& batch, const GameConfig& cfg);

/// Ascent direction for the transform player. Exact gradient for L2SQ; a
/// subgradient with sign(0) = 0 for L1. Includes lambda * grad R(T).
Eigen::MatrixXd grad_transform(const Dictionary& d, const Transform& t,
                               const SampleBatch& batch, const GameConfig& cfg);

/// Descent direction for the dictionary player. Only the synthesized-energy
/// term depends on D; the real-data and regularizer terms contribute zero.
Eigen::MatrixXd grad_dictionary(const Dictionary& d, const Transform& t,
                                const SampleBatch& batch, const GameConfig& cfg);

/// Iteration budget and step sizes for the two single-player solves used by
/// nash_gap.
struct InnerBudget {
  int transform_steps = 200;
  int dictionary_steps = 200;
  double step_size_T = 1e-2;
  double step_size_D = 1e-2;
  bool project_rows = true;
};

/// Estimated equilibrium gap at (d, t):
///   [max over T' of L(d, T')] - [min over D' of L(D', t)],
/// with both inner problems solved by the trainer's best-iterate projected
/// (sub)gradient routines started from the current point. Nonnegative by
/// construction and near zero at an equilibrium.
double nash_gap(const Dictionary& d, const Transform& t, const SampleBatch& batch,
                const GameConfig& cfg, const InnerBudget& budget);

}  // namespace dtgan
