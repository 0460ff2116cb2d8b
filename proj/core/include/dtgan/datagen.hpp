#pragma once

#include "dtgan/core.hpp"
#include "dtgan/rng.hpp"

#include <iosfwd>
#include <vector>

namespace dtgan {

/// Mixture of four isotropic Gaussians in the plane. Means sit at the
/// corners separation * (+-1, +-1) / sqrt(2), so `separation` is the
/// distance from the origin to every component mean. Components are
/// equally weighted.
struct MixtureSpec {
  int dim = 2;
  int num_components = 4;
  double separation = 1.0;
  double component_cov = 1.0;  // isotropic variance per coordinate

  MixtureSpec() = default;
  MixtureSpec(double sep, double cov = 1.0);
};

/// Gaussian mixture with additive per-coordinate Student-t noise.
struct HeavyTailSpec {
  MixtureSpec base;
  double dof = 3.0;          // must exceed 1 so the noise mean exists
  double noise_scale = 1.0;

  HeavyTailSpec() = default;
  HeavyTailSpec(MixtureSpec mixture, double degrees_of_freedom, double scale = 1.0);
};

/// Axis-aligned block mixture in the plane: a coordinate axis is chosen
/// uniformly, the on-axis coordinate is uniform on [-3, 3], and every other
/// coordinate is noise_scale * standard normal.
struct BlockMixtureSpec {
  int dim = 2;
  double noise_scale = 0.2;

  BlockMixtureSpec() = default;
  explicit BlockMixtureSpec(double scale);
};

/// A ground-truth synthesis model: unit-norm-column dictionary plus the
/// latent law. Construction verifies that every size-s column submatrix has
/// smallest singular value above 1e-8.
struct GroundTruth {
  Dictionary d0;
  LatentSpec latent;

  GroundTruth() = default;
  GroundTruth(Dictionary dict, LatentSpec spec);

  /// Draws random unit columns until the full dictionary clears
  /// `min_singular` on every size-s submatrix.
  static GroundTruth random_well_conditioned(int n, int k, int s, double frob_bound,
                                             RngState& rng, double min_singular = 0.5);
};

/// One latent draw: support uniform over size-s subsets, active
/// coefficients i.i.d. standard normal.
SparseLatent sample_latent(const LatentSpec& spec, RngState& rng);

/// x = D0 z draws from the ground-truth model.
std::vector<Eigen::VectorXd> sample_synthesis(const GroundTruth& gt, int n_samples, RngState& rng);

std::vector<Eigen::VectorXd> sample_gmm(const MixtureSpec& spec, int n_samples, RngState& rng);

/// Gaussian mixture plus Student-t noise. With noise_scale exactly zero no
/// noise variates are consumed, so the stream matches sample_gmm.
std::vector<Eigen::VectorXd> sample_heavy(const HeavyTailSpec& spec, int n_samples, RngState& rng);

std::vector<Eigen::VectorXd> sample_block(const BlockMixtureSpec& spec, int n_samples,
                                          RngState& rng);

/// Component mean of the Gaussian mixture (index 0..3).
Eigen::Vector2d mixture_mean(const MixtureSpec& spec, int component);

/// One sample per row, comma separated.
void dump_samples_csv(std::ostream& out, const std::vector<Eigen::VectorXd>& samples);

Eigen::MatrixXd samples_to_matrix(const std::vector<Eigen::VectorXd>& samples);

}  // namespace dtgan
