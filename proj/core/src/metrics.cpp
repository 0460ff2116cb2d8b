#include "dtgan/metrics.hpp"

#include <Eigen/SVD>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dtgan {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Eigen::VectorXd sample_mean(const std::vector<Eigen::VectorXd>& samples) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(samples.front().size());
  for (const Eigen::VectorXd& x : samples) {
    require(x.size() == mean.size(), "samples must share a dimension");
    mean += x;
  }
  return mean / double(samples.size());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

double recovery_error(const std::vector<Eigen::VectorXd>& generated,
                      const std::vector<Eigen::VectorXd>& real) {
  require(!generated.empty() && !real.empty(), "recovery_error needs nonempty sample lists");
  require(generated.front().size() == real.front().size(),
          "generated and real samples must share a dimension");
  return (sample_mean(generated) - sample_mean(real)).norm();
}

double recovery_error(const Eigen::MatrixXd& generated, const Eigen::MatrixXd& real) {
  require(generated.cols() >= 1 && real.cols() >= 1, "recovery_error needs nonempty batches");
  require(generated.rows() == real.rows(), "generated and real samples must share a dimension");
  const Eigen::VectorXd gm = generated.rowwise().mean();
  const Eigen::VectorXd rm = real.rowwise().mean();
  return (gm - rm).norm();
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  require(cost.rows() == cost.cols() && cost.rows() >= 1, "cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();

  // Shortest augmenting paths with potentials, 1-based internal indexing.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

MatchResult dictionary_recovery(const Dictionary& d_hat, const Dictionary& d0) {
  require(d_hat.entries.rows() == d0.entries.rows() && d_hat.entries.cols() == d0.entries.cols(),
          "dictionaries must share a shape");
  const int k = d0.atom_count();
  for (int j = 0; j < k; ++j) {
    require(std::abs(d0.entries.col(j).norm() - 1.0) <= 1e-6,
            "reference dictionary columns must be unit norm");
  }

  Eigen::MatrixXd hat = d_hat.entries;
  for (int j = 0; j < k; ++j) {
    const double norm = hat.col(j).norm();
    if (norm > 0.0) hat.col(j) /= norm;
  }

  // gain(i, j) = |<hat_i, d0_j>|; assignment maximizes the total gain.
  Eigen::MatrixXd gain(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) gain(i, j) = std::abs(hat.col(i).dot(d0.entries.col(j)));
  const std::vector<int> hat_to_ref = solve_assignment(-gain);

  MatchResult result;
  result.permutation.assign(k, 0);
  result.signs.assign(k, 1);
  Eigen::MatrixXd matched(d0.entries.rows(), k);
  for (int i = 0; i < k; ++i) {
    const int j = hat_to_ref[i];
    result.permutation[j] = i;
    const double inner = hat.col(i).dot(d0.entries.col(j));
    result.signs[j] = inner >= 0.0 ? 1 : -1;
    matched.col(i) = double(result.signs[j]) * d0.entries.col(j);
  }
  result.residual = (hat - matched).norm();
  return result;
}

double alignment_residual(const Dictionary& d, const Transform& t, const LatentSpec& spec,
                          int n_probe, RngState& rng) {
  require(n_probe >= 1, "n_probe must be >= 1");
  require(spec.atom_count == d.atom_count(), "latent spec does not match dictionary");
  require(t.signal_dim() == d.ambient_dim(), "transform width does not match dictionary");
  const int n = d.ambient_dim();
  const int m = t.row_count();

  double total = 0.0;
  long count = 0;
  for (int probe_idx = 0; probe_idx < n_probe; ++probe_idx) {
    const SparseLatent z = sample_latent(spec, rng);
    Eigen::MatrixXd active(n, static_cast<Eigen::Index>(z.support.size()));
    for (std::size_t j = 0; j < z.support.size(); ++j) active.col(j) = d.entries.col(z.support[j]);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(active, Eigen::ComputeFullU);
    const Eigen::VectorXd sv = svd.singularValues();
    const double floor = 1e-12 * std::max(1.0, sv.size() > 0 ? sv[0] : 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv[i] > floor) ++rank;
    }
    if (rank >= n) continue;  // empty orthogonal complement

    const Eigen::MatrixXd span_basis = svd.matrixU().leftCols(rank);
    const Eigen::MatrixXd perp_basis = svd.matrixU().rightCols(n - rank);

    std::vector<double> span_response(m);
    for (int i = 0; i < m; ++i) {
      span_response[i] =
          rank == 0 ? 0.0 : (span_basis.transpose() * t.entries.row(i).transpose()).norm();
    }
    const double med = median(span_response);

    Eigen::VectorXd coeff(n - rank);
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff[i] = rng.next_normal();
      norm = coeff.norm();
    } while (norm < kRowTolerance);
    const Eigen::VectorXd probe = perp_basis * (coeff / norm);

    for (int i = 0; i < m; ++i) {
      if (span_response[i] <= med + 1e-12) {
        const double response = t.entries.row(i).dot(probe);
        total += response * response;
        ++count;
      }
    }
  }
  return count == 0 ? 0.0 : total / double(count);
}

SaddlePoint bruteforce_saddle(int n, int k, int m, const SampleBatch& batch,
                              const GameConfig& cfg, int grid_resolution) {
  require(n == k && k == m && (n == 1 || n == 2), "grid oracle supports square 1-D or 2-D games");
  require(grid_resolution >= 2, "grid_resolution must be >= 2");
  require(batch.signal_dim() == n, "batch dimension does not match the game");

  // Dictionary grid: every entry on a uniform grid, points outside the
  // Frobenius ball rejected.
  const double c = cfg.frob_bound;
  const int entries = n * k;
  std::vector<double> axis(grid_resolution);
  for (int i = 0; i < grid_resolution; ++i) {
    axis[i] = -c + 2.0 * c * double(i) / double(grid_resolution - 1);
  }
  std::vector<Eigen::MatrixXd> dict_grid;
  {
    std::vector<int> idx(entries, 0);
    for (;;) {
      Eigen::MatrixXd d(n, k);
      for (int e = 0; e < entries; ++e) d(e % n, e / n) = axis[idx[e]];
      if (d.norm() <= c + 1e-12) dict_grid.push_back(std::move(d));
      int pos = 0;
      while (pos < entries && ++idx[pos] == grid_resolution) idx[pos++] = 0;
      if (pos == entries) break;
    }
  }

  // Transform grid: each row is a point on the unit circle (both unit
  // points when n = 1).
  std::vector<Eigen::RowVectorXd> row_grid;
  double angle_spacing;
  if (n == 1) {
    row_grid.push_back(Eigen::RowVectorXd::Constant(1, 1.0));
    row_grid.push_back(Eigen::RowVectorXd::Constant(1, -1.0));
    angle_spacing = M_PI;
  } else {
    angle_spacing = 2.0 * M_PI / grid_resolution;
    for (int i = 0; i < grid_resolution; ++i) {
      Eigen::RowVectorXd r(2);
      r << std::cos(i * angle_spacing), std::sin(i * angle_spacing);
      row_grid.push_back(std::move(r));
    }
  }
  std::size_t transform_count = 1;
  for (int i = 0; i < m; ++i) transform_count *= row_grid.size();
  require(double(dict_grid.size()) * double(transform_count) <= 1e6, "grid too large");

  std::vector<Eigen::MatrixXd> transform_grid;
  transform_grid.reserve(transform_count);
  {
    std::vector<std::size_t> idx(m, 0);
    for (;;) {
      Eigen::MatrixXd t(m, n);
      for (int i = 0; i < m; ++i) t.row(i) = row_grid[idx[i]];
      transform_grid.push_back(std::move(t));
      int pos = 0;
      while (pos < m && ++idx[pos] == row_grid.size()) idx[pos++] = 0;
      if (pos == m) break;
    }
  }

  // The real-data and penalty terms depend on T alone; cache them.
  std::vector<double> t_only_term(transform_grid.size());
  for (std::size_t ti = 0; ti < transform_grid.size(); ++ti) {
    const Transform t(transform_grid[ti]);
    const Eigen::MatrixXd tx = t.entries * batch.data;
    const double real = cfg.energy == EnergyKind::L1 ? tx.cwiseAbs().sum() / batch.data_count()
                                                     : tx.squaredNorm() / batch.data_count();
    t_only_term[ti] = real + cfg.lambda * row_penalty(t);
  }

  double best_value = std::numeric_limits<double>::infinity();
  std::size_t best_d = 0, best_t = 0;
  for (std::size_t di = 0; di < dict_grid.size(); ++di) {
    const Eigen::MatrixXd fake = dict_grid[di] * batch.latent_matrix;
    double inner_max = -std::numeric_limits<double>::infinity();
    std::size_t inner_arg = 0;
    for (std::size_t ti = 0; ti < transform_grid.size(); ++ti) {
      const Eigen::MatrixXd tfake = transform_grid[ti] * fake;
      const double fake_term = cfg.energy == EnergyKind::L1
                                   ? tfake.cwiseAbs().sum() / batch.latent_count()
                                   : tfake.squaredNorm() / batch.latent_count();
      const double value = t_only_term[ti] - fake_term;
      if (value > inner_max) {
        inner_max = value;
        inner_arg = ti;
      }
    }
    if (inner_max < best_value) {
      best_value = inner_max;
      best_d = di;
      best_t = inner_arg;
    }
  }

  SaddlePoint out;
  out.dictionary = Dictionary(dict_grid[best_d], cfg.frob_bound);
  out.transform = Transform(transform_grid[best_t]);
  out.value = best_value;
  out.dict_spacing = 2.0 * c / double(grid_resolution - 1);
  out.angle_spacing = angle_spacing;
  return out;
}

RateFit fit_power_law(const std::vector<double>& sample_sizes, const std::vector<double>& gaps) {
  require(sample_sizes.size() == gaps.size(), "sample_sizes and gaps must have equal length");
  require(sample_sizes.size() >= 3, "power-law fit needs at least three points");
  for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
    require(sample_sizes[i] > 0.0, "sample sizes must be positive");
    require(gaps[i] > 0.0, "gaps must be positive");
    if (i > 0) require(sample_sizes[i] > sample_sizes[i - 1], "sample sizes must be increasing");
  }

  const std::size_t n = sample_sizes.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(sample_sizes[i]);
    const double y = std::log(gaps[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = double(n) * sxx - sx * sx;
  RateFit fit;
  fit.sample_sizes = sample_sizes;
  fit.gaps = gaps;
  fit.fitted_exponent = (double(n) * sxy - sx * sy) / denom;
  fit.fitted_log_constant = (sy - fit.fitted_exponent * sx) / double(n);
  return fit;
}

TrainConfig RateExperimentConfig::rate_train_template() {
  TrainConfig tc;
  tc.outer_iters = 1500;
  tc.step_size_D = 1e-3;
  tc.step_size_T = 1e-2;
  tc.batch_size = 256;
  tc.averaging_tail_fraction = 0.5;
  tc.log_every = 500;
  return tc;
}

RateExperimentResult rate_experiment(const RateExperimentConfig& cfg) {
  require(cfg.sample_sizes.size() >= 3, "rate experiment needs at least three sample sizes");
  require(cfg.trials >= 1, "rate experiment needs at least one trial");
  require(cfg.ref_multiple >= 1, "ref_multiple must be >= 1");
  cfg.train_template.validate();

  RngState rng = RngState::seeded(cfg.seed);
  GroundTruth gt = GroundTruth::random_well_conditioned(
      cfg.ambient_dim, cfg.atom_count, cfg.sparsity, cfg.game.frob_bound, rng, cfg.min_singular);

  const int max_n = *std::max_element(cfg.sample_sizes.begin(), cfg.sample_sizes.end());
  const int ref_n = cfg.ref_multiple * max_n;

  RngState data_rng = rng.split();
  RngState latent_rng = rng.split();

  // Reference sample standing in for the population objective, and one
  // latent batch shared by every evaluation so the synthesized-energy and
  // regularizer terms cancel exactly in the gap.
  const Eigen::MatrixXd ref_data = samples_to_matrix(sample_synthesis(gt, ref_n, data_rng));
  std::vector<SparseLatent> eval_latents;
  eval_latents.reserve(cfg.eval_latent_count);
  for (int i = 0; i < cfg.eval_latent_count; ++i)
    eval_latents.push_back(sample_latent(gt.latent, latent_rng));

  RateExperimentResult result;
  result.excluded_trials.assign(cfg.sample_sizes.size(), 0);
  std::vector<double> mean_gaps;
  for (std::size_t si = 0; si < cfg.sample_sizes.size(); ++si) {
    const int n_samples = cfg.sample_sizes[si];
    double gap_sum = 0.0;
    int ok_trials = 0;
    for (int trial = 0; trial < cfg.trials; ++trial) {
      TrainConfig tc = cfg.train_template;
      tc.seed = RngState::mix(cfg.seed ^ (0x9e37ull * (si + 1)) ^ (0x85ebca6bull * (trial + 1)));
      const Eigen::MatrixXd data = samples_to_matrix(sample_synthesis(gt, n_samples, data_rng));
      try {
        const TrainResult run = train(data, gt.latent, cfg.game, tc, cfg.transform_rows);
        // Objective-value gap between the N-sample game and the reference
        // game, measured at the trained players. Evaluating both sides at
        // the same point isolates the sampling deviation from any
        // optimizer error, which would otherwise dominate at desk scale.
        const SampleBatch batch_n(data, eval_latents);
        const SampleBatch batch_ref(ref_data, eval_latents);
        const double v_n =
            empirical_objective(run.dictionary, run.transform, batch_n, cfg.game).total;
        const double v_ref =
            empirical_objective(run.dictionary, run.transform, batch_ref, cfg.game).total;
        gap_sum += std::abs(v_n - v_ref);
        ++ok_trials;
      } catch (const DivergenceError&) {
        ++result.excluded_trials[si];
      }
    }
    if (ok_trials == 0) throw std::runtime_error("all trials diverged for one sample size");
    mean_gaps.push_back(std::max(gap_sum / ok_trials, 1e-12));
  }

  std::vector<double> sizes(cfg.sample_sizes.begin(), cfg.sample_sizes.end());
  result.fit = fit_power_law(sizes, mean_gaps);
  return result;
}

std::string metric_record_json(const std::string& name, double value,
                               const std::string& config_hash, std::uint64_t seed) {
  nlohmann::json j;
  j["metric"] = name;
  j["value"] = value;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  return j.dump();
}

std::string config_hash_hex(const std::string& serialized_config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : serialized_config) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

}  // namespace dtgan
