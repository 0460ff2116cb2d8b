#pragma once

#include "dtgan/rng.hpp"
#include "dtgan/trainer.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace dtgan {

/// Hyperparameters of the two-layer MLP baseline. Budget knobs (iterations,
/// batch_size) are matched against the dictionary model by the experiment
/// harness.
struct GanConfig {
  int latent_dim = 2;
  int hidden_dim = 32;
  double step_size_g = 1e-2;
  double step_size_d = 1e-2;
  int batch_size = 128;
  int iterations = 2000;
  std::uint64_t seed = 0;
  int log_every = 100;

  void validate() const;
};

/// Weights of the generator (latent -> hidden -> data, rectifier hidden,
/// linear output) and the discriminator (data -> hidden -> 1, rectifier
/// hidden, logistic output).
struct MlpParams {
  Eigen::MatrixXd g_w1;     // hidden x latent
  Eigen::VectorXd g_b1;     // hidden
  Eigen::MatrixXd g_w2;     // data x hidden
  Eigen::VectorXd g_b2;     // data
  Eigen::MatrixXd d_w1;     // hidden x data
  Eigen::VectorXd d_b1;     // hidden
  Eigen::RowVectorXd d_w2;  // 1 x hidden
  double d_b2 = 0.0;

  /// Scaled-normal initialization (scale 1/sqrt(fan_in)), zero biases.
  static MlpParams init(int data_dim, const GanConfig& cfg, RngState& rng);
  bool all_finite() const;
};

struct GenGrads {
  Eigen::MatrixXd g_w1;
  Eigen::VectorXd g_b1;
  Eigen::MatrixXd g_w2;
  Eigen::VectorXd g_b2;
};

struct DiscGrads {
  Eigen::MatrixXd d_w1;
  Eigen::VectorXd d_b1;
  Eigen::RowVectorXd d_w2;
  double d_b2 = 0.0;
};

/// Generator forward pass; z_batch columns are latent draws.
Eigen::MatrixXd gan_forward_generator(const MlpParams& p, const Eigen::MatrixXd& z_batch);

/// Discriminator probabilities for each column of x_batch; values in (0,1).
Eigen::RowVectorXd gan_discriminator_prob(const MlpParams& p, const Eigen::MatrixXd& x_batch);

/// Binary cross-entropy of the discriminator on a real and a fake batch
/// (to be minimized). Probabilities are clamped to [1e-7, 1-1e-7] inside
/// the logs only.
double gan_disc_loss(const MlpParams& p, const Eigen::MatrixXd& real_batch,
                     const Eigen::MatrixXd& fake_batch);

/// Non-saturating generator loss -mean log D(G(z)) (to be minimized).
double gan_gen_loss(const MlpParams& p, const Eigen::MatrixXd& z_batch);

/// Manual backprop of gan_disc_loss with respect to discriminator weights.
DiscGrads gan_disc_grads(const MlpParams& p, const Eigen::MatrixXd& real_batch,
                         const Eigen::MatrixXd& fake_batch);

/// Manual backprop of gan_gen_loss with respect to generator weights.
GenGrads gan_gen_grads(const MlpParams& p, const Eigen::MatrixXd& z_batch);

/// One adversarial round: a discriminator descent step on the BCE loss with
/// a fresh fake batch, then a generator step on the non-saturating loss with
/// another fresh latent batch. Deterministic given the rng state.
MlpParams gan_step(const MlpParams& p, const Eigen::MatrixXd& real_batch, const GanConfig& cfg,
                   RngState& rng);

struct GanTrainResult {
  MlpParams params;
  TrainTrajectory trajectory;  // same CSV schema as the dictionary trainer
};

/// Trains on minibatches drawn with replacement from the columns of `data`.
/// Throws DivergenceError with the iteration index when the loss or the
/// parameters go non-finite. Trajectory points reuse the trainer schema:
/// total = discriminator loss, real/fake terms = its two summands,
/// reg_term = 0, frob_D = Frobenius norm of generator weights,
/// max_row_dev = 0.
GanTrainResult gan_train(const Eigen::MatrixXd& data, const GanConfig& cfg);

/// The exact starting parameters a gan_train() call with this configuration
/// would use, without running any steps.
MlpParams gan_initial_params(int data_dim, const GanConfig& cfg);

/// Draws n_samples generator outputs (isotropic normal latents).
Eigen::MatrixXd gan_sample(const MlpParams& p, int n_samples, RngState& rng);

}  // namespace dtgan
