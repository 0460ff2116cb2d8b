#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtgan {

/// Feasibility tolerance for unit-norm transform rows.
inline constexpr double kRowTolerance = 1e-12;

/// Convex energy applied to transform coefficients:phi(u) = |u|_1 or |u|_2^2.
enum class EnergyKind { L1, L2SQ };

std::string to_string(EnergyKind kind);
EnergyKind energy_kind_from_string(const std::string& name);

/// Thrown when an optimization run produces a non-finite objective.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int iteration, const std::string& what_happened)
      : std::runtime_error("divergence at iteration " + std::to_string(iteration) + ": " +
                           what_happened),
        iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

/// Thrown by project_transform_rows when a row norm falls below kRowTolerance.
/// Training code reinitializes such rows instead of aborting; see Trainer.
class DegenerateRowError : public std::runtime_error {
 public:
  explicit DegenerateRowError(int row)
      : std::runtime_error("transform row " + std::to_string(row) +
                           " has near-zero norm and cannot be normalized"),
        row_(row) {}
  int row() const { return row_; }

 private:
  int row_;
};

/// The generator: a synthesis operator whose columns (atoms) combine
/// linearly to produce samples. Feasible set is the Frobenius ball of
/// radius `frob_bound`.
struct Dictionary {
  Eigen::MatrixXd entries;  // n x k, n = ambient dimension, k = atoms
  double frob_bound = 1.0;

  Dictionary() = default;
  Dictionary(Eigen::MatrixXd m, double bound);

  int ambient_dim() const { return static_cast<int>(entries.rows()); }
  int atom_count() const { return static_cast<int>(entries.cols()); }
  bool is_feasible(double tol = 1e-9) const { return entries.norm() <= frob_bound + tol; }
};

/// The discriminator: an analysis operator whose rows measure a signal.
/// Feasible rows have unit Euclidean norm (within kRowTolerance).
struct Transform {
  Eigen::MatrixXd entries;  // m x n

  Transform() = default;
  explicit Transform(Eigen::MatrixXd m);

  int row_count() const { return static_cast<int>(entries.rows()); }
  int signal_dim() const { return static_cast<int>(entries.cols()); }
  /// Largest deviation of any row norm from 1.
  double max_row_deviation() const;
};

/// Support distribution of the latent draw.
enum class SupportLaw { UniformSubsets };
/// Law of the active coefficients.
enum class CoeffLaw { StandardNormal };

/// Specification of the sparse latent distribution: supports of size
/// `sparsity` drawn uniformly over all subsets, active coefficients i.i.d.
/// standard normal. Every size-s support has positive probability.
struct LatentSpec {
  int atom_count = 1;  // k
  int sparsity = 1;    // s, 1 <= s <= k
  SupportLaw support_law = SupportLaw::UniformSubsets;
  CoeffLaw coeff_law = CoeffLaw::StandardNormal;

  LatentSpec() = default;
  LatentSpec(int k, int s);
};

/// A single latent draw: values vanish outside `support`.
struct SparseLatent {
  Eigen::VectorXd values;    // length k
  std::vector<int> support;  // sorted, |support| <= s

  SparseLatent() = default;
  SparseLatent(Eigen::VectorXd v, std::vector<int> supp);
};

/// Game-level constants: the energy functional, the weight lambda on the
/// row regularizer in the objective, and the dictionary Frobenius bound.
///
/// `row_penalty_weight` is a training-time stabilizer used only when hard
/// row projection is switched off: ascent steps subtract that multiple of
/// the row-penalty gradient so the transform stays near unit rows. It does
/// not enter the objective value, which always uses `lambda`.
struct GameConfig {
  EnergyKind energy = EnergyKind::L1;
  double lambda = 1.0;
  double frob_bound = 1.0;
  double row_penalty_weight = 0.0;

  GameConfig() = default;
  GameConfig(EnergyKind e, double lam, double bound, double row_weight = 0.0);

  /// Defaults for a k-atom game: C_D = sqrt(k) keeps unit-norm-column
  /// dictionaries strictly feasible.
  static GameConfig defaults_for(int atom_count);
};

/// x = D z. Uses only the columns selected by the latent support.
Eigen::VectorXd synthesize(const Dictionary& d, const SparseLatent& z);

/// phi(u): sum of absolute values (L1) or sum of squares (L2SQ).
double energy(EnergyKind kind, const Eigen::VectorXd& u);

/// phi(T x).
double transform_energy(const Transform& t, EnergyKind kind, const Eigen::VectorXd& x);

/// R(T) = sum_i (|t_i|_2^2 - 1)^2; zero exactly on unit-row transforms.
double row_penalty(const Transform& t);

/// Gradient of R(T); row i is 4 (|t_i|^2 - 1) t_i.
Eigen::MatrixXd row_penalty_gradient(const Transform& t);

/// Radial projection onto the Frobenius ball of radius d.frob_bound.
Dictionary project_dictionary(const Dictionary& d);

/// Normalizes every row to unit Euclidean norm. Rows already within
/// kRowTolerance of unit norm are left untouched, so the projection is
/// exactly idempotent. Throws DegenerateRowError for near-zero rows.
Transform project_transform_rows(const Transform& t);

}  // namespace dtgan
