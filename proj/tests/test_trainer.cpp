#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dtgan/datagen.hpp"
#include "dtgan/experiment.hpp"
#include "dtgan/metrics.hpp"
#include "dtgan/trainer.hpp"
#include "oracles.hpp"

#include <sstream>

using namespace dtgan;

namespace {

SampleBatch scalar_game_batch(double data_value, int n_x, int n_z) {
  std::vector<SparseLatent> latents;
  for (int i = 0; i < n_z; ++i) {
    latents.emplace_back(Eigen::VectorXd::Constant(1, 1.0), std::vector<int>{0});
  }
  return SampleBatch(Eigen::MatrixXd::Constant(1, n_x, data_value), std::move(latents));
}

Eigen::MatrixXd random_matrix(int rows, int cols, RngState& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.next_normal();
  return m;
}

bool trajectories_identical(const TrainTrajectory& a, const TrainTrajectory& b) {
  if (a.points.size() != b.points.size()) return false;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    const TrajectoryPoint& p = a.points[i];
    const TrajectoryPoint& q = b.points[i];
    if (p.iteration != q.iteration || p.objective.total != q.objective.total ||
        p.objective.real_energy_term != q.objective.real_energy_term ||
        p.objective.fake_energy_term != q.objective.fake_energy_term ||
        p.objective.reg_term != q.objective.reg_term || p.frob_D != q.frob_D ||
        p.max_row_dev != q.max_row_dev) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("init_players is deterministic, feasible, and seed sensitive") {
  const GameConfig cfg = GameConfig::defaults_for(3);
  const auto [d1, t1] = init_players(4, 3, 2, cfg, 99);
  const auto [d2, t2] = init_players(4, 3, 2, cfg, 99);
  CHECK((d1.entries - d2.entries).norm() == 0.0);
  CHECK((t1.entries - t2.entries).norm() == 0.0);

  CHECK(d1.is_feasible(1e-12));
  CHECK(t1.max_row_deviation() <= 1e-12);

  const auto [d3, t3] = init_players(4, 3, 2, cfg, 100);
  CHECK((d1.entries - d3.entries).norm() > 0.0);
  CHECK((t1.entries - t3.entries).norm() > 0.0);
}

TEST_CASE("TrainConfig rejects zero step sizes and counts") {
  CHECK_THROWS_AS(TrainConfig(100, 5, 0.0, 1e-2, 32, 0, true, 10), std::invalid_argument);
  CHECK_THROWS_AS(TrainConfig(100, 5, 1e-2, 0.0, 32, 0, true, 10), std::invalid_argument);
  CHECK_THROWS_AS(TrainConfig(0, 5, 1e-2, 1e-2, 32, 0, true, 10), std::invalid_argument);
  CHECK_THROWS_AS(TrainConfig(100, 0, 1e-2, 1e-2, 32, 0, true, 10), std::invalid_argument);
  CHECK_THROWS_AS(TrainConfig(100, 5, 1e-2, 1e-2, 0, 0, true, 10), std::invalid_argument);
  CHECK_NOTHROW(TrainConfig(100, 5, 1e-2, 1e-2, 32, 0, true, 10));
}

TEST_CASE("training the scalar game reaches the grid minimax value") {
  const GameConfig cfg(EnergyKind::L1, 1.0, 3.0);
  const Eigen::MatrixXd data = Eigen::MatrixXd::Constant(1, 128, 2.0);
  TrainConfig tc;
  tc.outer_iters = 1500;
  tc.seed = 3;
  const TrainResult run = train(data, LatentSpec(1, 1), cfg, tc);

  const SampleBatch oracle_batch = scalar_game_batch(2.0, 8, 8);
  const double trainer_value =
      empirical_objective(run.dictionary, run.transform, oracle_batch, cfg).total;
  const auto [grid_value, grid_d] = oracle::scalar_game_grid_minimax(2.0, 3.0, 601);
  CHECK(grid_value == doctest::Approx(-1.0));  // 2 - |d| minimized at |d| = C_D = 3
  CHECK(std::abs(grid_d) == doctest::Approx(3.0));
  CHECK(std::abs(trainer_value - grid_value) <= 5e-2);
}

TEST_CASE("training is deterministic per seed and logs increasing iterations") {
  RngState rng = RngState::seeded(31);
  const GameConfig cfg = GameConfig::defaults_for(2);
  GroundTruth gt = GroundTruth::random_well_conditioned(2, 2, 1, cfg.frob_bound, rng, 0.5);
  const Eigen::MatrixXd data = samples_to_matrix(sample_synthesis(gt, 200, rng));

  TrainConfig tc;
  tc.outer_iters = 60;
  tc.log_every = 7;
  tc.seed = 12345;
  const TrainResult a = train(data, gt.latent, cfg, tc);
  const TrainResult b = train(data, gt.latent, cfg, tc);
  CHECK(trajectories_identical(a.trajectory, b.trajectory));
  CHECK((a.dictionary.entries - b.dictionary.entries).norm() == 0.0);
  CHECK((a.transform.entries - b.transform.entries).norm() == 0.0);

  for (std::size_t i = 1; i < a.trajectory.points.size(); ++i) {
    CHECK(a.trajectory.points[i].iteration > a.trajectory.points[i - 1].iteration);
  }
  CHECK(a.trajectory.points.back().iteration == 60);

  TrainConfig tc2 = tc;
  tc2.seed = 54321;
  const TrainResult c = train(data, gt.latent, cfg, tc2);
  CHECK((a.dictionary.entries - c.dictionary.entries).norm() > 0.0);
}

TEST_CASE("feasibility holds at every logged step") {
  RngState rng = RngState::seeded(32);
  const GameConfig cfg = GameConfig::defaults_for(3);
  const Eigen::MatrixXd data = random_matrix(2, 300, rng);
  TrainConfig tc;
  tc.outer_iters = 120;
  tc.log_every = 5;
  tc.seed = 8;
  const TrainResult run = train(data, LatentSpec(3, 2), cfg, tc);
  for (const TrajectoryPoint& p : run.trajectory.points) {
    CHECK(p.frob_D <= cfg.frob_bound + 1e-9);
    CHECK(p.max_row_dev <= 1e-9);
    CHECK(std::isfinite(p.objective.total));
  }
}

TEST_CASE("unprojected ascent on the row regularizer diverges with a named iteration") {
  // With hard projection off and no stabilizer, the +lambda R(T) term in the
  // ascent direction inflates the rows without bound.
  RngState rng = RngState::seeded(33);
  const GameConfig cfg(EnergyKind::L2SQ, 5.0, 2.0, 0.0);
  const Eigen::MatrixXd data = random_matrix(2, 50, rng);
  TrainConfig tc;
  tc.outer_iters = 4000;
  tc.step_size_T = 0.5;
  tc.project_rows_each_step = false;
  tc.seed = 4;
  try {
    train(data, LatentSpec(2, 1), cfg, tc);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.iteration() >= 1);
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
  }
}

TEST_CASE("solve_inner_max: stationary point, best-iterate guarantee, angular grid oracle") {
  // zero gradient: all-zero batch, lambda = 0, rows exactly unit
  std::vector<SparseLatent> latents;
  latents.emplace_back(Eigen::VectorXd::Zero(2), std::vector<int>{});
  const SampleBatch zero_batch(Eigen::MatrixXd::Zero(2, 3), latents);
  const GameConfig cfg0(EnergyKind::L2SQ, 0.0, 2.0);
  const Transform t0(Eigen::MatrixXd::Identity(2, 2));
  const Transform t1 = solve_inner_max(Dictionary(Eigen::MatrixXd::Identity(2, 2), 2.0), t0,
                                       zero_batch, cfg0, 1, 1e-2);
  CHECK((t1.entries - t0.entries).norm() == 0.0);

  // best-iterate: returned objective never drops below the start
  RngState rng = RngState::seeded(34);
  const LatentSpec spec(2, 1);
  std::vector<SparseLatent> ls;
  for (int i = 0; i < 16; ++i) ls.push_back(sample_latent(spec, rng));
  const SampleBatch batch(random_matrix(2, 16, rng), ls);
  const GameConfig cfg(EnergyKind::L2SQ, 0.5, 2.0);
  const Dictionary d(random_matrix(2, 2, rng), 2.0);
  const Transform start(project_transform_rows(Transform(random_matrix(2, 2, rng))).entries);
  const double v0 = empirical_objective(d, start, batch, cfg).total;
  const Transform best = solve_inner_max(d, start, batch, cfg, 150, 1e-2);
  const double v1 = empirical_objective(d, best, batch, cfg).total;
  CHECK(v1 >= v0 - 1e-12);

  // angular grid oracle: objective of the returned transform within 1e-2 of
  // the best over a fine grid of row angles
  double grid_best = -std::numeric_limits<double>::infinity();
  const int grid = 720;
  for (int a = 0; a < grid; ++a) {
    for (int b = 0; b < grid; ++b) {
      Eigen::MatrixXd te(2, 2);
      te << std::cos(2 * M_PI * a / grid), std::sin(2 * M_PI * a / grid),
          std::cos(2 * M_PI * b / grid), std::sin(2 * M_PI * b / grid);
      grid_best = std::max(grid_best, empirical_objective(d, Transform(te), batch, cfg).total);
    }
  }
  const Transform polished = solve_inner_max(d, best, batch, cfg, 3000, 2e-2);
  const double achieved = empirical_objective(d, polished, batch, cfg).total;
  CHECK(std::abs(achieved - grid_best) <= 1e-2);
}

TEST_CASE("solve_inner_min: zero latents stationary, best-iterate, scalar grid oracle") {
  std::vector<SparseLatent> zeros;
  zeros.emplace_back(Eigen::VectorXd::Zero(2), std::vector<int>{});
  RngState rng = RngState::seeded(35);
  const SampleBatch batch(random_matrix(2, 4, rng), zeros);
  const GameConfig cfg(EnergyKind::L2SQ, 0.0, 2.0);
  const Dictionary d0(0.3 * random_matrix(2, 2, rng), 2.0);
  const Transform t(project_transform_rows(Transform(random_matrix(2, 2, rng))).entries);
  const Dictionary d1 = solve_inner_min(t, d0, batch, cfg, 1, 1e-2);
  CHECK((d1.entries - d0.entries).norm() == 0.0);

  const LatentSpec spec(2, 1);
  std::vector<SparseLatent> ls;
  for (int i = 0; i < 16; ++i) ls.push_back(sample_latent(spec, rng));
  const SampleBatch batch2(random_matrix(2, 16, rng), ls);
  const Dictionary dr(random_matrix(2, 2, rng), 2.0);
  const double v0 = empirical_objective(dr, t, batch2, cfg).total;
  const Dictionary best = solve_inner_min(t, dr, batch2, cfg, 200, 1e-2);
  CHECK(empirical_objective(best, t, batch2, cfg).total <= v0 + 1e-12);

  // scalar game: inner min over d in [-3, 3] at fixed t = 1
  const SampleBatch sg = scalar_game_batch(2.0, 8, 8);
  const GameConfig cfg1(EnergyKind::L1, 1.0, 3.0);
  const Dictionary dstart(Eigen::MatrixXd::Constant(1, 1, 0.2), 3.0);
  const Transform tfix(Eigen::MatrixXd::Constant(1, 1, 1.0));
  const Dictionary dmin = solve_inner_min(tfix, dstart, sg, cfg1, 400, 1e-2);
  double grid_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 601; ++i) {
    const double dv = -3.0 + 6.0 * i / 600.0;
    grid_min = std::min(grid_min,
                        empirical_objective(Dictionary(Eigen::MatrixXd::Constant(1, 1, dv), 3.0),
                                            tfix, sg, cfg1)
                            .total);
  }
  CHECK(std::abs(empirical_objective(dmin, tfix, sg, cfg1).total - grid_min) <= 1e-2);
}

TEST_CASE("identifiability on exact synthesis data with a known ground truth") {
  const IdentifiabilitySetup setup = identifiability_setup();
  RngState rng = RngState::seeded(36);
  GroundTruth gt =
      GroundTruth::random_well_conditioned(2, 2, 1, setup.game.frob_bound, rng, setup.min_singular);
  const Eigen::MatrixXd data = samples_to_matrix(sample_synthesis(gt, setup.data_samples, rng));
  TrainConfig tc = setup.train;
  tc.seed = 17;
  const TrainResult run = train(data, gt.latent, setup.game, tc, setup.transform_rows);
  const MatchResult match = dictionary_recovery(run.dictionary, gt.d0);
  CHECK(match.residual < 0.1);
}

TEST_CASE("trajectory CSV schema and determinism") {
  RngState rng = RngState::seeded(37);
  const GameConfig cfg = GameConfig::defaults_for(2);
  const Eigen::MatrixXd data = random_matrix(2, 100, rng);
  TrainConfig tc;
  tc.outer_iters = 40;
  tc.log_every = 10;
  tc.seed = 9;
  const TrainResult run = train(data, LatentSpec(2, 1), cfg, tc);

  std::ostringstream a, b;
  write_trajectory_csv(a, run.trajectory);
  write_trajectory_csv(b, run.trajectory);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("iteration,total,real_term,fake_term,reg_term,frob_D,max_row_dev\n", 0) ==
        0);
  CHECK(run.trajectory.points.size() == 4);
}
