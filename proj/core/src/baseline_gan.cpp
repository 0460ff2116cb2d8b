#include "dtgan/baseline_gan.hpp"

namespace dtgan {

namespace {

constexpr double kProbClamp = 1e-7;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double stable_sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double clamped_log(double p) {
  return std::log(std::min(1.0 - kProbClamp, std::max(kProbClamp, p)));
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& a) { return a.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& a) {
  return a.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

struct DiscForward {
  Eigen::MatrixXd a1;      // hidden x B, pre-activation
  Eigen::MatrixXd h;       // hidden x B
  Eigen::RowVectorXd s;    // 1 x B, logit
  Eigen::RowVectorXd p;    // 1 x B, probability
};

DiscForward disc_forward(const MlpParams& p, const Eigen::MatrixXd& x) {
  require(x.rows() == p.d_w1.cols(), "discriminator input dimension mismatch");
  DiscForward f;
  f.a1 = (p.d_w1 * x).colwise() + p.d_b1;
  f.h = relu(f.a1);
  f.s = (p.d_w2 * f.h).array() + p.d_b2;
  f.p = f.s.unaryExpr([](double v) { return stable_sigmoid(v); });
  return f;
}

// Backprop of a scalar loss through the discriminator given dLoss/dlogit.
void disc_backward(const MlpParams& p, const Eigen::MatrixXd& x, const DiscForward& f,
                   const Eigen::RowVectorXd& ds, DiscGrads& g) {
  g.d_w2 += ds * f.h.transpose();
  g.d_b2 += ds.sum();
  const Eigen::MatrixXd dh = p.d_w2.transpose() * ds;
  const Eigen::MatrixXd da = dh.cwiseProduct(relu_mask(f.a1));
  g.d_w1 += da * x.transpose();
  g.d_b1 += da.rowwise().sum();
}

}  // namespace

void GanConfig::validate() const {
  require(latent_dim >= 1, "latent_dim must be >= 1");
  require(hidden_dim >= 1, "hidden_dim must be >= 1");
  require(step_size_g > 0.0, "step_size_g must be positive");
  require(step_size_d > 0.0, "step_size_d must be positive");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(iterations >= 1, "iterations must be >= 1");
  require(log_every >= 1, "log_every must be >= 1");
}

MlpParams MlpParams::init(int data_dim, const GanConfig& cfg, RngState& rng) {
  require(data_dim >= 1, "data_dim must be >= 1");
  auto scaled_normal = [&rng](Eigen::Index rows, Eigen::Index cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.next_normal();
    return m;
  };
  MlpParams p;
  p.g_w1 = scaled_normal(cfg.hidden_dim, cfg.latent_dim, 1.0 / std::sqrt(double(cfg.latent_dim)));
  p.g_b1 = Eigen::VectorXd::Zero(cfg.hidden_dim);
  p.g_w2 = scaled_normal(data_dim, cfg.hidden_dim, 1.0 / std::sqrt(double(cfg.hidden_dim)));
  p.g_b2 = Eigen::VectorXd::Zero(data_dim);
  p.d_w1 = scaled_normal(cfg.hidden_dim, data_dim, 1.0 / std::sqrt(double(data_dim)));
  p.d_b1 = Eigen::VectorXd::Zero(cfg.hidden_dim);
  p.d_w2 = scaled_normal(1, cfg.hidden_dim, 1.0 / std::sqrt(double(cfg.hidden_dim)));
  p.d_b2 = 0.0;
  return p;
}

bool MlpParams::all_finite() const {
  return g_w1.allFinite() && g_b1.allFinite() && g_w2.allFinite() && g_b2.allFinite() &&
         d_w1.allFinite() && d_b1.allFinite() && d_w2.allFinite() && std::isfinite(d_b2);
}

Eigen::MatrixXd gan_forward_generator(const MlpParams& p, const Eigen::MatrixXd& z_batch) {
  require(z_batch.rows() == p.g_w1.cols(), "latent dimension mismatch");
  const Eigen::MatrixXd h = relu((p.g_w1 * z_batch).colwise() + p.g_b1);
  return (p.g_w2 * h).colwise() + p.g_b2;
}

Eigen::RowVectorXd gan_discriminator_prob(const MlpParams& p, const Eigen::MatrixXd& x_batch) {
  return disc_forward(p, x_batch).p;
}

double gan_disc_loss(const MlpParams& p, const Eigen::MatrixXd& real_batch,
                     const Eigen::MatrixXd& fake_batch) {
  require(real_batch.cols() >= 1 && fake_batch.cols() >= 1, "batches must be nonempty");
  const DiscForward fr = disc_forward(p, real_batch);
  const DiscForward ff = disc_forward(p, fake_batch);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < fr.p.size(); ++i) loss -= clamped_log(fr.p[i]);
  loss /= double(fr.p.size());
  double fake_loss = 0.0;
  for (Eigen::Index i = 0; i < ff.p.size(); ++i) fake_loss -= clamped_log(1.0 - ff.p[i]);
  loss += fake_loss / double(ff.p.size());
  return loss;
}

double gan_gen_loss(const MlpParams& p, const Eigen::MatrixXd& z_batch) {
  require(z_batch.cols() >= 1, "latent batch must be nonempty");
  const Eigen::MatrixXd fake = gan_forward_generator(p, z_batch);
  const DiscForward f = disc_forward(p, fake);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < f.p.size(); ++i) loss -= clamped_log(f.p[i]);
  return loss / double(f.p.size());
}

DiscGrads gan_disc_grads(const MlpParams& p, const Eigen::MatrixXd& real_batch,
                         const Eigen::MatrixXd& fake_batch) {
  DiscGrads g;
  g.d_w1 = Eigen::MatrixXd::Zero(p.d_w1.rows(), p.d_w1.cols());
  g.d_b1 = Eigen::VectorXd::Zero(p.d_b1.size());
  g.d_w2 = Eigen::RowVectorXd::Zero(p.d_w2.size());
  g.d_b2 = 0.0;

  const DiscForward fr = disc_forward(p, real_batch);
  const Eigen::RowVectorXd ds_real = (fr.p.array() - 1.0) / double(real_batch.cols());
  disc_backward(p, real_batch, fr, ds_real, g);

  const DiscForward ff = disc_forward(p, fake_batch);
  const Eigen::RowVectorXd ds_fake = ff.p / double(fake_batch.cols());
  disc_backward(p, fake_batch, ff, ds_fake, g);
  return g;
}

GenGrads gan_gen_grads(const MlpParams& p, const Eigen::MatrixXd& z_batch) {
  const Eigen::Index batch = z_batch.cols();
  const Eigen::MatrixXd a1g = (p.g_w1 * z_batch).colwise() + p.g_b1;
  const Eigen::MatrixXd hg = relu(a1g);
  const Eigen::MatrixXd fake = (p.g_w2 * hg).colwise() + p.g_b2;

  const DiscForward f = disc_forward(p, fake);
  const Eigen::RowVectorXd ds = (f.p.array() - 1.0) / double(batch);
  const Eigen::MatrixXd dh_d = p.d_w2.transpose() * ds;
  const Eigen::MatrixXd da_d = dh_d.cwiseProduct(relu_mask(f.a1));
  const Eigen::MatrixXd dx = p.d_w1.transpose() * da_d;

  GenGrads g;
  g.g_w2 = dx * hg.transpose();
  g.g_b2 = dx.rowwise().sum();
  const Eigen::MatrixXd dhg = p.g_w2.transpose() * dx;
  const Eigen::MatrixXd dag = dhg.cwiseProduct(relu_mask(a1g));
  g.g_w1 = dag * z_batch.transpose();
  g.g_b1 = dag.rowwise().sum();
  return g;
}

MlpParams gan_step(const MlpParams& p, const Eigen::MatrixXd& real_batch, const GanConfig& cfg,
                   RngState& rng) {
  require(real_batch.cols() >= 1, "real batch must be nonempty");
  const Eigen::Index batch = real_batch.cols();
  auto draw_latents = [&rng, &cfg, batch]() {
    Eigen::MatrixXd z(cfg.latent_dim, batch);
    for (Eigen::Index j = 0; j < batch; ++j)
      for (int i = 0; i < cfg.latent_dim; ++i) z(i, j) = rng.next_normal();
    return z;
  };

  MlpParams out = p;
  const Eigen::MatrixXd fake = gan_forward_generator(out, draw_latents());
  const DiscGrads dg = gan_disc_grads(out, real_batch, fake);
  out.d_w1 -= cfg.step_size_d * dg.d_w1;
  out.d_b1 -= cfg.step_size_d * dg.d_b1;
  out.d_w2 -= cfg.step_size_d * dg.d_w2;
  out.d_b2 -= cfg.step_size_d * dg.d_b2;

  const GenGrads gg = gan_gen_grads(out, draw_latents());
  out.g_w1 -= cfg.step_size_g * gg.g_w1;
  out.g_b1 -= cfg.step_size_g * gg.g_b1;
  out.g_w2 -= cfg.step_size_g * gg.g_w2;
  out.g_b2 -= cfg.step_size_g * gg.g_b2;
  return out;
}

MlpParams gan_initial_params(int data_dim, const GanConfig& cfg) {
  cfg.validate();
  RngState master = RngState::seeded(cfg.seed);
  RngState init_rng = RngState::seeded(master.next_u64());
  return MlpParams::init(data_dim, cfg, init_rng);
}

GanTrainResult gan_train(const Eigen::MatrixXd& data, const GanConfig& cfg) {
  cfg.validate();
  require(data.cols() >= 1, "training data must contain at least one sample");
  require(data.allFinite(), "training data must be finite");

  RngState master = RngState::seeded(cfg.seed);
  const std::uint64_t init_seed = master.next_u64();
  RngState train_rng = master.split();
  RngState eval_rng = master.split();

  RngState init_rng = RngState::seeded(init_seed);
  GanTrainResult result;
  result.params = MlpParams::init(static_cast<int>(data.rows()), cfg, init_rng);

  Eigen::MatrixXd minibatch(data.rows(), cfg.batch_size);
  for (int it = 1; it <= cfg.iterations; ++it) {
    for (int j = 0; j < cfg.batch_size; ++j) {
      const auto idx = train_rng.next_below(static_cast<std::uint64_t>(data.cols()));
      minibatch.col(j) = data.col(static_cast<Eigen::Index>(idx));
    }
    result.params = gan_step(result.params, minibatch, cfg, train_rng);
    if (!result.params.all_finite()) throw DivergenceError(it, "non-finite GAN parameters");

    if (it % cfg.log_every == 0 || it == cfg.iterations) {
      Eigen::MatrixXd z(cfg.latent_dim, cfg.batch_size);
      for (int j = 0; j < cfg.batch_size; ++j)
        for (int i = 0; i < cfg.latent_dim; ++i) z(i, j) = eval_rng.next_normal();
      const Eigen::MatrixXd fake = gan_forward_generator(result.params, z);
      const DiscForward fr = disc_forward(result.params, minibatch);
      const DiscForward ff = disc_forward(result.params, fake);
      double real_term = 0.0, fake_term = 0.0;
      for (Eigen::Index i = 0; i < fr.p.size(); ++i) real_term -= clamped_log(fr.p[i]);
      real_term /= double(fr.p.size());
      for (Eigen::Index i = 0; i < ff.p.size(); ++i) fake_term -= clamped_log(1.0 - ff.p[i]);
      fake_term /= double(ff.p.size());

      ObjectiveValue v;
      v.real_energy_term = real_term;
      v.fake_energy_term = fake_term;
      v.reg_term = 0.0;
      v.total = real_term + fake_term;
      if (!v.is_finite()) throw DivergenceError(it, "non-finite GAN loss");
      const double gen_norm = std::sqrt(result.params.g_w1.squaredNorm() +
                                        result.params.g_b1.squaredNorm() +
                                        result.params.g_w2.squaredNorm() +
                                        result.params.g_b2.squaredNorm());
      if (result.trajectory.points.empty() ||
          result.trajectory.points.back().iteration != it) {
        result.trajectory.points.push_back({it, v, gen_norm, 0.0, 0.0, false});
      }
    }
  }
  return result;
}

Eigen::MatrixXd gan_sample(const MlpParams& p, int n_samples, RngState& rng) {
  require(n_samples >= 0, "n_samples must be nonnegative");
  Eigen::MatrixXd z(p.g_w1.cols(), n_samples);
  for (int j = 0; j < n_samples; ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = rng.next_normal();
  return gan_forward_generator(p, z);
}

}  // namespace dtgan
