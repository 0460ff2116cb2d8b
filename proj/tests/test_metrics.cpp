#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dtgan/metrics.hpp"
#include "oracles.hpp"

#include <nlohmann/json.hpp>

using namespace dtgan;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, RngState& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.next_normal();
  return m;
}

Eigen::MatrixXd random_unit_columns(int rows, int cols, RngState& rng) {
  Eigen::MatrixXd m = random_matrix(rows, cols, rng);
  for (int j = 0; j < cols; ++j) m.col(j) /= m.col(j).norm();
  return m;
}

std::vector<Eigen::VectorXd> random_samples(int dim, int count, RngState& rng) {
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < count; ++i) out.push_back(random_matrix(dim, 1, rng).col(0));
  return out;
}

SampleBatch scalar_game_batch(double data_value, int n_x, int n_z) {
  std::vector<SparseLatent> latents;
  for (int i = 0; i < n_z; ++i) {
    latents.emplace_back(Eigen::VectorXd::Constant(1, 1.0), std::vector<int>{0});
  }
  return SampleBatch(Eigen::MatrixXd::Constant(1, n_x, data_value), std::move(latents));
}

}  // namespace

TEST_CASE("recovery_error: identical lists, hand value, naive oracle, invariances") {
  RngState rng = RngState::seeded(71);
  const auto xs = random_samples(3, 20, rng);
  CHECK(recovery_error(xs, xs) == 0.0);

  std::vector<Eigen::VectorXd> gen = {(Eigen::VectorXd(2) << 2.0, 0.0).finished(),
                                      (Eigen::VectorXd(2) << 0.0, 0.0).finished()};
  std::vector<Eigen::VectorXd> real = {(Eigen::VectorXd(2) << 0.0, 0.0).finished()};
  CHECK(recovery_error(gen, real) == doctest::Approx(1.0));

  const auto a = random_samples(4, 15, rng);
  const auto b = random_samples(4, 25, rng);
  const double got = recovery_error(a, b);
  const double want = (oracle::naive_mean(a) - oracle::naive_mean(b)).norm();
  CHECK(got == doctest::Approx(want).epsilon(1e-12));

  // symmetry and translation covariance
  CHECK(recovery_error(a, b) == doctest::Approx(recovery_error(b, a)).epsilon(1e-12));
  Eigen::VectorXd shift(4);
  shift << 1.0, -2.0, 0.5, 3.0;
  auto as = a, bs = b;
  for (auto& x : as) x += shift;
  for (auto& x : bs) x += shift;
  CHECK(std::abs(recovery_error(as, bs) - recovery_error(a, b)) <= 1e-12);

  CHECK_THROWS_AS(recovery_error(std::vector<Eigen::VectorXd>{}, b), std::invalid_argument);
}

TEST_CASE("solve_assignment agrees with exhaustive search") {
  RngState rng = RngState::seeded(72);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + int(rng.next_below(4));
    const Eigen::MatrixXd cost = random_matrix(n, n, rng);
    const std::vector<int> assign = solve_assignment(cost);
    double total = 0.0;
    std::vector<char> used(n, 0);
    for (int i = 0; i < n; ++i) {
      REQUIRE(assign[i] >= 0);
      REQUIRE(assign[i] < n);
      CHECK(!used[assign[i]]);
      used[assign[i]] = 1;
      total += cost(i, assign[i]);
    }
    CHECK(total == doctest::Approx(oracle::exhaustive_assignment_cost(cost)).epsilon(1e-10));
  }
}

TEST_CASE("dictionary_recovery: exact ambiguity class, identity, exhaustive oracle") {
  RngState rng = RngState::seeded(73);
  const Eigen::MatrixXd d0e = random_unit_columns(3, 2, rng);
  const Dictionary d0(d0e, 2.0);

  // swapped columns with one negation
  Eigen::MatrixXd swapped(3, 2);
  swapped.col(0) = d0e.col(1);
  swapped.col(1) = -d0e.col(0);
  const MatchResult m = dictionary_recovery(Dictionary(swapped, 2.0), d0);
  CHECK(m.residual < 1e-10);
  CHECK(m.permutation == std::vector<int>{1, 0});
  CHECK(m.signs == std::vector<int>{-1, 1});

  const MatchResult ident = dictionary_recovery(d0, d0);
  CHECK(ident.residual == doctest::Approx(0.0));
  CHECK(ident.permutation == std::vector<int>{0, 1});
  CHECK(ident.signs == std::vector<int>{1, 1});

  // random learned dictionary against the exhaustive matcher
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd ref = random_unit_columns(2, 2, rng);
    const Eigen::MatrixXd hat = random_matrix(2, 2, rng);
    Eigen::MatrixXd hat_norm = hat;
    for (int j = 0; j < 2; ++j) hat_norm.col(j) /= hat_norm.col(j).norm();
    const MatchResult got = dictionary_recovery(Dictionary(hat, 2.0), Dictionary(ref, 2.0));
    const double want = oracle::exhaustive_match_residual(hat_norm, ref);
    CHECK(got.residual == doctest::Approx(want).epsilon(1e-10));
  }

  Eigen::MatrixXd wrong_shape(3, 3);
  wrong_shape.setIdentity();
  CHECK_THROWS_AS(dictionary_recovery(Dictionary(wrong_shape, 2.0), d0), std::invalid_argument);
}

TEST_CASE("dictionary_recovery residual is invariant over the permutation-sign class") {
  RngState rng = RngState::seeded(74);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 3;
    const Dictionary d0(random_unit_columns(4, k, rng), 2.0);
    const Eigen::MatrixXd hat = random_matrix(4, k, rng);
    const double base = dictionary_recovery(Dictionary(hat, 2.0), d0).residual;

    // random permutation and signs applied to the learned dictionary
    std::vector<int> perm = {0, 1, 2};
    for (int i = 2; i > 0; --i) std::swap(perm[i], perm[int(rng.next_below(i + 1))]);
    Eigen::MatrixXd shuffled(4, k);
    for (int j = 0; j < k; ++j) {
      shuffled.col(j) = (rng.next_double() < 0.5 ? -1.0 : 1.0) * hat.col(perm[j]);
    }
    const double moved = dictionary_recovery(Dictionary(shuffled, 2.0), d0).residual;
    CHECK(std::abs(moved - base) <= 1e-10);
  }
}

TEST_CASE("alignment_residual: aligned row, orthogonal rows, empty complement") {
  // n=2, k=1, s=1, T = [d^T]: the probe lies orthogonal to d, response 0
  Eigen::MatrixXd col(2, 1);
  col << 0.6, 0.8;
  const Dictionary d(col, 1.0);
  const LatentSpec spec(1, 1);
  RngState rng = RngState::seeded(75);
  const Transform t(col.transpose());
  CHECK(alignment_residual(d, t, spec, 50, rng) <= 1e-20);

  // rows orthogonal to every dictionary column: residual equals the naive
  // probe-loop average
  Eigen::MatrixXd orth(1, 2);
  orth << -0.8, 0.6;
  RngState impl_rng = RngState::seeded(76);
  RngState oracle_rng = RngState::seeded(76);
  const double got = alignment_residual(d, Transform(orth), spec, 64, impl_rng);

  // oracle replays the same stream: one latent draw (support + coefficient),
  // then a unit probe in the 1-D complement
  double total = 0.0;
  int count = 0;
  for (int i = 0; i < 64; ++i) {
    (void)sample_latent(spec, oracle_rng);
    Eigen::VectorXd coeff(1);
    double norm = 0.0;
    do {
      coeff[0] = oracle_rng.next_normal();
      norm = std::abs(coeff[0]);
    } while (norm < 1e-12);
    const Eigen::Vector2d perp(-0.8, 0.6);  // unit vector orthogonal to d
    const Eigen::Vector2d probe = perp * (coeff[0] / norm);
    const double resp = orth.row(0).dot(probe);
    total += resp * resp;
    ++count;
  }
  CHECK(got == doctest::Approx(total / count).epsilon(1e-9));

  // full support of a square dictionary leaves no orthogonal complement
  const Dictionary full(Eigen::MatrixXd::Identity(3, 3), 2.0);
  RngState rng3 = RngState::seeded(77);
  CHECK(alignment_residual(full, Transform(Eigen::MatrixXd::Identity(3, 3)), LatentSpec(3, 3), 20,
                           rng3) == 0.0);
}

TEST_CASE("bruteforce_saddle: flat game, scalar game value, sandwich, refinement") {
  // all-zero batch with lambda 0: the game is identically zero
  std::vector<SparseLatent> zero_latents;
  zero_latents.emplace_back(Eigen::VectorXd::Zero(1), std::vector<int>{});
  const SampleBatch flat(Eigen::MatrixXd::Zero(1, 4), zero_latents);
  const GameConfig flat_cfg(EnergyKind::L1, 0.0, 1.0);
  const SaddlePoint flat_saddle = bruteforce_saddle(1, 1, 1, flat, flat_cfg, 51);
  CHECK(flat_saddle.value == doctest::Approx(0.0));

  // scalar check game: value -1 at |d| = C_D = 3 (hand enumeration:
  // max over t in {-1,1} of |2t| - |td| is 2 - |d|, minimized at the bound)
  const SampleBatch game = scalar_game_batch(2.0, 8, 8);
  const GameConfig cfg(EnergyKind::L1, 1.0, 3.0);
  const SaddlePoint s = bruteforce_saddle(1, 1, 1, game, cfg, 601);
  const auto [oracle_value, oracle_d] = oracle::scalar_game_grid_minimax(2.0, 3.0, 601);
  CHECK(s.value == doctest::Approx(oracle_value).epsilon(1e-12));
  CHECK(std::abs(s.dictionary.entries(0, 0)) == doctest::Approx(std::abs(oracle_d)));
  CHECK(s.value == doctest::Approx(-1.0));

  // sandwich: min over the D-grid at the returned T <= value <= max over the
  // T-grid at the returned D
  double min_at_t = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 601; ++i) {
    const double dv = -3.0 + 6.0 * i / 600.0;
    min_at_t = std::min(min_at_t,
                        empirical_objective(Dictionary(Eigen::MatrixXd::Constant(1, 1, dv), 3.0),
                                            s.transform, game, cfg)
                            .total);
  }
  double max_at_d = -std::numeric_limits<double>::infinity();
  for (double tv : {-1.0, 1.0}) {
    max_at_d = std::max(max_at_d,
                        empirical_objective(s.dictionary,
                                            Transform(Eigen::MatrixXd::Constant(1, 1, tv)), game,
                                            cfg)
                            .total);
  }
  CHECK(min_at_t <= s.value + 1e-12);
  CHECK(s.value <= max_at_d + 1e-12);

  // successive refinement moves the value by at most a grid-Lipschitz bound
  const SaddlePoint fine = bruteforce_saddle(1, 1, 1, game, cfg, 1201);
  // |dL/dd| <= mean |z| = 1 on this batch, so doubling the resolution can
  // move the value by at most the coarse spacing
  CHECK(std::abs(fine.value - s.value) <= s.dict_spacing);

  CHECK_THROWS_AS(bruteforce_saddle(2, 2, 2, flat, flat_cfg, 120), std::invalid_argument);
}

TEST_CASE("bruteforce_saddle handles the 2-D game and nash_gap closes at its point") {
  RngState rng = RngState::seeded(78);
  const LatentSpec spec(2, 1);
  std::vector<SparseLatent> latents;
  for (int i = 0; i < 8; ++i) latents.push_back(sample_latent(spec, rng));
  const SampleBatch batch(random_matrix(2, 8, rng), latents);
  const GameConfig cfg(EnergyKind::L1, 1.0, std::sqrt(2.0));
  const SaddlePoint s = bruteforce_saddle(2, 2, 2, batch, cfg, 9);
  CHECK(std::isfinite(s.value));
  CHECK(s.dictionary.is_feasible(1e-9));

  InnerBudget budget;
  budget.transform_steps = 200;
  budget.dictionary_steps = 200;
  const double gap = nash_gap(s.dictionary, s.transform, batch, cfg, budget);
  // within twice the grid slack of zero
  const double slack = 2.0 * (s.dict_spacing + s.angle_spacing);
  CHECK(gap >= -1e-6);
  CHECK(gap <= slack);
}

TEST_CASE("fit_power_law: flat gaps, exact inverse square root, validation") {
  const std::vector<double> ns = {100, 400, 1600, 6400};
  const RateFit flat = fit_power_law(ns, {0.3, 0.3, 0.3, 0.3});
  CHECK(flat.fitted_exponent == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<double> gaps;
  for (double n : ns) gaps.push_back(2.5 / std::sqrt(n));
  const RateFit root = fit_power_law(ns, gaps);
  CHECK(std::abs(root.fitted_exponent + 0.5) <= 1e-8);
  CHECK(std::exp(root.fitted_log_constant) == doctest::Approx(2.5).epsilon(1e-8));

  CHECK_THROWS_AS(fit_power_law({100, 200}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_power_law({100, 50, 200}, {1.0, 2.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_power_law({100, 200, 400}, {1.0, -2.0, 1.0}), std::invalid_argument);
}

TEST_CASE("rate_experiment smoke run is deterministic and reports exclusions") {
  RateExperimentConfig rc;
  rc.sample_sizes = {30, 60, 120};
  rc.trials = 2;
  rc.ref_multiple = 2;
  rc.eval_latent_count = 500;
  rc.train_template.outer_iters = 60;
  rc.train_template.batch_size = 32;
  rc.seed = 5;
  const RateExperimentResult a = rate_experiment(rc);
  const RateExperimentResult b = rate_experiment(rc);
  CHECK(a.fit.fitted_exponent == b.fit.fitted_exponent);
  CHECK(a.fit.gaps == b.fit.gaps);
  CHECK(a.excluded_trials == std::vector<int>{0, 0, 0});
  for (double g : a.fit.gaps) CHECK(g > 0.0);
}

TEST_CASE("metric json records carry name, value, config hash and seed") {
  const std::string rec = metric_record_json("err", 0.125, config_hash_hex("abc"), 7);
  const auto j = nlohmann::json::parse(rec);
  CHECK(j["metric"] == "err");
  CHECK(j["value"] == 0.125);
  CHECK(j["seed"] == 7);
  CHECK(j["config_hash"] == config_hash_hex("abc"));
  CHECK(config_hash_hex("abc") != config_hash_hex("abd"));
}
