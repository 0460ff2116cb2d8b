#include "dtgan/trainer.hpp"

#include "dtgan/datagen.hpp"

#include <iomanip>
#include <ostream>

namespace dtgan {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Eigen::VectorXd normalized_normal_vector(int dim, RngState& rng) {
  Eigen::VectorXd v(dim);
  for (;;) {
    for (int i = 0; i < dim; ++i) v[i] = rng.next_normal();
    const double norm = v.norm();
    if (norm >= kRowTolerance) return v / norm;
  }
}

// Rows that collapsed to numerically zero norm are redrawn before the
// projection; a measure-zero event that should not abort a run.
void reinit_degenerate_rows(Transform& t, RngState& rng) {
  for (Eigen::Index i = 0; i < t.entries.rows(); ++i) {
    if (t.entries.row(i).norm() < kRowTolerance) {
      t.entries.row(i) = normalized_normal_vector(t.signal_dim(), rng).transpose();
    }
  }
}

// Ascent direction on T. When rows are not hard-projected, the configured
// row_penalty_weight pulls rows back toward unit norm during the step.
Eigen::MatrixXd transform_ascent_direction(const Dictionary& d, const Transform& t,
                                           const SampleBatch& batch, const GameConfig& cfg,
                                           bool project_rows) {
  Eigen::MatrixXd g = grad_transform(d, t, batch, cfg);
  if (!project_rows && cfg.row_penalty_weight > 0.0) {
    g -= cfg.row_penalty_weight * row_penalty_gradient(t);
  }
  return g;
}

}  // namespace

TrainConfig::TrainConfig(int outer, int disc_steps, double lr_d, double lr_t, int batch,
                         std::uint64_t seed_value, bool project_rows, int log_stride)
    : outer_iters(outer),
      disc_steps_per_gen_step(disc_steps),
      step_size_D(lr_d),
      step_size_T(lr_t),
      batch_size(batch),
      seed(seed_value),
      project_rows_each_step(project_rows),
      log_every(log_stride) {
  validate();
}

void TrainConfig::validate() const {
  require(outer_iters >= 1, "outer_iters must be >= 1");
  require(disc_steps_per_gen_step >= 1, "disc_steps_per_gen_step must be >= 1");
  require(step_size_D > 0.0, "step_size_D must be positive");
  require(step_size_T > 0.0, "step_size_T must be positive");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(log_every >= 1, "log_every must be >= 1");
  require(averaging_tail_fraction >= 0.0 && averaging_tail_fraction <= 1.0,
          "averaging_tail_fraction must lie in [0, 1]");
}

std::pair<Dictionary, Transform> init_players(int n, int k, int m, const GameConfig& cfg,
                                              std::uint64_t seed) {
  require(n >= 1 && k >= 1 && m >= 1, "player dimensions must be >= 1");
  RngState rng = RngState::seeded(seed);

  Eigen::MatrixXd d_entries(n, k);
  for (int j = 0; j < k; ++j) d_entries.col(j) = normalized_normal_vector(n, rng);
  Dictionary d = project_dictionary(Dictionary(std::move(d_entries), cfg.frob_bound));

  Eigen::MatrixXd t_entries(m, n);
  for (int i = 0; i < m; ++i) t_entries.row(i) = normalized_normal_vector(n, rng).transpose();
  return {std::move(d), Transform(std::move(t_entries))};
}

std::pair<Dictionary, Transform> train_initial_players(const Eigen::MatrixXd& data,
                                                       const LatentSpec& latent_spec,
                                                       const GameConfig& game,
                                                       const TrainConfig& tc, int transform_rows) {
  tc.validate();
  require(data.rows() >= 1, "training data must have at least one row");
  const int n = static_cast<int>(data.rows());
  const int m = transform_rows >= 1 ? transform_rows : n;
  RngState master = RngState::seeded(tc.seed);
  return init_players(n, latent_spec.atom_count, m, game, master.next_u64());
}

TrainResult train(const Eigen::MatrixXd& data, const LatentSpec& latent_spec,
                  const GameConfig& game, const TrainConfig& tc, int transform_rows) {
  tc.validate();
  require(data.cols() >= 1, "training data must contain at least one sample");
  require(data.allFinite(), "training data must be finite");
  const int n = static_cast<int>(data.rows());
  const int m = transform_rows >= 1 ? transform_rows : n;

  RngState master = RngState::seeded(tc.seed);
  const std::uint64_t init_seed = master.next_u64();
  RngState latent_rng = master.split();
  RngState reinit_rng = master.split();

  auto [d, t] = init_players(n, latent_spec.atom_count, m, game, init_seed);

  TrainResult result;
  result.trajectory.points.reserve(tc.outer_iters / tc.log_every + 2);

  const int avg_window = static_cast<int>(tc.averaging_tail_fraction * tc.outer_iters);
  const int avg_start = tc.outer_iters - std::max(avg_window, 1) + 1;
  Eigen::MatrixXd dict_sum = Eigen::MatrixXd::Zero(n, latent_spec.atom_count);
  long dict_count = 0;

  for (int it = 1; it <= tc.outer_iters; ++it) {
    std::vector<SparseLatent> latents;
    latents.reserve(tc.batch_size);
    for (int i = 0; i < tc.batch_size; ++i) latents.push_back(sample_latent(latent_spec, latent_rng));
    const SampleBatch batch(data, std::move(latents));

    for (int j = 0; j < tc.disc_steps_per_gen_step; ++j) {
      t.entries += tc.step_size_T *
                   transform_ascent_direction(d, t, batch, game, tc.project_rows_each_step);
      if (tc.project_rows_each_step) {
        reinit_degenerate_rows(t, reinit_rng);
        t = project_transform_rows(t);
      }
    }

    d.entries -= tc.step_size_D * grad_dictionary(d, t, batch, game);
    d = project_dictionary(d);

    if (!d.entries.allFinite() || !t.entries.allFinite()) {
      throw DivergenceError(it, "non-finite player parameters");
    }

    if (tc.averaging_tail_fraction > 0.0 && it >= avg_start) {
      dict_sum += d.entries;
      ++dict_count;
    }

    if (it % tc.log_every == 0 || it == tc.outer_iters) {
      const ObjectiveValue v = empirical_objective(d, t, batch, game);
      if (!v.is_finite()) throw DivergenceError(it, "non-finite objective value");
      if (result.trajectory.points.empty() ||
          result.trajectory.points.back().iteration != it) {
        result.trajectory.points.push_back(
            {it, v, d.entries.norm(), t.max_row_deviation(), 0.0, false});
      }
    }
  }

  if (tc.averaging_tail_fraction > 0.0 && dict_count > 0) {
    result.dictionary =
        project_dictionary(Dictionary(dict_sum / double(dict_count), game.frob_bound));
  } else {
    result.dictionary = std::move(d);
  }
  result.transform = std::move(t);
  return result;
}

Transform solve_inner_max(const Dictionary& d, const Transform& t0, const SampleBatch& batch,
                          const GameConfig& cfg, int steps, double step_size, bool project_rows) {
  require(steps >= 0, "steps must be nonnegative");
  require(step_size > 0.0, "step_size must be positive");
  Transform t = t0;
  Transform best = t0;
  double best_value = empirical_objective(d, t0, batch, cfg).total;
  for (int s = 1; s <= steps; ++s) {
    t.entries += step_size * transform_ascent_direction(d, t, batch, cfg, project_rows);
    if (project_rows) t = project_transform_rows(t);
    const ObjectiveValue v = empirical_objective(d, t, batch, cfg);
    if (!v.is_finite()) throw DivergenceError(s, "non-finite objective in inner max solve");
    if (v.total > best_value) {
      best_value = v.total;
      best = t;
    }
  }
  return best;
}

Dictionary solve_inner_min(const Transform& t, const Dictionary& d0, const SampleBatch& batch,
                           const GameConfig& cfg, int steps, double step_size) {
  require(steps >= 0, "steps must be nonnegative");
  require(step_size > 0.0, "step_size must be positive");
  Dictionary d = d0;
  Dictionary best = d0;
  double best_value = empirical_objective(d0, t, batch, cfg).total;
  for (int s = 1; s <= steps; ++s) {
    d.entries -= step_size * grad_dictionary(d, t, batch, cfg);
    d = project_dictionary(d);
    const ObjectiveValue v = empirical_objective(d, t, batch, cfg);
    if (!v.is_finite()) throw DivergenceError(s, "non-finite objective in inner min solve");
    if (v.total < best_value) {
      best_value = v.total;
      best = d;
    }
  }
  return best;
}

void write_trajectory_csv(std::ostream& out, const TrainTrajectory& trajectory) {
  out << "iteration,total,real_term,fake_term,reg_term,frob_D,max_row_dev\n";
  out << std::setprecision(17);
  for (const TrajectoryPoint& p : trajectory.points) {
    out << p.iteration << ',' << p.objective.total << ',' << p.objective.real_energy_term << ','
        << p.objective.fake_energy_term << ',' << p.objective.reg_term << ',' << p.frob_D << ','
        << p.max_row_dev << '\n';
  }
}

}  // namespace dtgan
