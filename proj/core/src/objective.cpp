#include "dtgan/objective.hpp"

#include "dtgan/trainer.hpp"

namespace dtgan {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Eigen::MatrixXd signs_of(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

}  // namespace

SampleBatch::SampleBatch(Eigen::MatrixXd data_columns, std::vector<SparseLatent> latent_draws)
    : data(std::move(data_columns)), latents(std::move(latent_draws)) {
  require(data.cols() >= 1, "batch needs at least one data sample");
  require(!latents.empty(), "batch needs at least one latent draw");
  require(data.allFinite(), "batch data must be finite");
  const Eigen::Index k = latents.front().values.size();
  latent_matrix.resize(k, static_cast<Eigen::Index>(latents.size()));
  for (std::size_t i = 0; i < latents.size(); ++i) {
    require(latents[i].values.size() == k, "latent draws must have a common length");
    latent_matrix.col(static_cast<Eigen::Index>(i)) = latents[i].values;
  }
}

SampleBatch SampleBatch::from_vectors(const std::vector<Eigen::VectorXd>& data_samples,
                                      std::vector<SparseLatent> latent_draws) {
  require(!data_samples.empty(), "batch needs at least one data sample");
  Eigen::MatrixXd m(data_samples.front().size(), static_cast<Eigen::Index>(data_samples.size()));
  for (std::size_t i = 0; i < data_samples.size(); ++i) {
    require(data_samples[i].size() == m.rows(), "data samples must have a common length");
    m.col(static_cast<Eigen::Index>(i)) = data_samples[i];
  }
  return SampleBatch(std::move(m), std::move(latent_draws));
}

static void check_dims(const Dictionary& d, const Transform& t, const SampleBatch& batch) {
  require(t.signal_dim() == batch.signal_dim(), "transform width does not match data dimension");
  require(d.ambient_dim() == batch.signal_dim(), "dictionary height does not match data dimension");
  require(d.atom_count() == batch.latent_matrix.rows(), "dictionary atom count does not match latents");
}

ObjectiveValue empirical_objective(const Dictionary& d, const Transform& t,
                                   const SampleBatch& batch, const GameConfig& cfg) {
  check_dims(d, t, batch);
  const Eigen::MatrixXd tx = t.entries * batch.data;
  const Eigen::MatrixXd tdz = t.entries * (d.entries * batch.latent_matrix);

  ObjectiveValue v;
  if (cfg.energy == EnergyKind::L1) {
    v.real_energy_term = tx.cwiseAbs().sum() / batch.data_count();
    v.fake_energy_term = tdz.cwiseAbs().sum() / batch.latent_count();
  } else {
    v.real_energy_term = tx.squaredNorm() / batch.data_count();
    v.fake_energy_term = tdz.squaredNorm() / batch.latent_count();
  }
  v.reg_term = row_penalty(t);
  v.total = v.real_energy_term - v.fake_energy_term + cfg.lambda * v.reg_term;
  return v;
}

Eigen::MatrixXd grad_transform(const Dictionary& d, const Transform& t,
                               const SampleBatch& batch, const GameConfig& cfg) {
  check_dims(d, t, batch);
  const Eigen::MatrixXd tx = t.entries * batch.data;
  const Eigen::MatrixXd fake = d.entries * batch.latent_matrix;  // n x N_z
  const Eigen::MatrixXd tfake = t.entries * fake;

  Eigen::MatrixXd real_part, fake_part;
  if (cfg.energy == EnergyKind::L2SQ) {
    real_part = (2.0 / batch.data_count()) * tx * batch.data.transpose();
    fake_part = (2.0 / batch.latent_count()) * tfake * fake.transpose();
  } else {
    real_part = (1.0 / batch.data_count()) * signs_of(tx) * batch.data.transpose();
    fake_part = (1.0 / batch.latent_count()) * signs_of(tfake) * fake.transpose();
  }
  return real_part - fake_part + cfg.lambda * row_penalty_gradient(t);
}

Eigen::MatrixXd grad_dictionary(const Dictionary& d, const Transform& t,
                                const SampleBatch& batch, const GameConfig& cfg) {
  check_dims(d, t, batch);
  const Eigen::MatrixXd fake = d.entries * batch.latent_matrix;
  const Eigen::MatrixXd tfake = t.entries * fake;
  if (cfg.energy == EnergyKind::L2SQ) {
    return (-2.0 / batch.latent_count()) * t.entries.transpose() * tfake *
           batch.latent_matrix.transpose();
  }
  return (-1.0 / batch.latent_count()) * t.entries.transpose() * signs_of(tfake) *
         batch.latent_matrix.transpose();
}

double nash_gap(const Dictionary& d, const Transform& t, const SampleBatch& batch,
                const GameConfig& cfg, const InnerBudget& budget) {
  const Transform best_t = solve_inner_max(d, t, batch, cfg, budget.transform_steps,
                                           budget.step_size_T, budget.project_rows);
  const Dictionary best_d =
      solve_inner_min(t, d, batch, cfg, budget.dictionary_steps, budget.step_size_D);
  const double upper = empirical_objective(d, best_t, batch, cfg).total;
  const double lower = empirical_objective(best_d, t, batch, cfg).total;
  return upper - lower;
}

}  // namespace dtgan
