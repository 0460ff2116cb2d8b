#include "dtgan/experiment.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace dtgan {

namespace {

using nlohmann::json;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::uint64_t derive_seed(std::uint64_t seed, double param, std::uint64_t salt) {
  return RngState::mix(RngState::mix(seed ^ salt) ^ std::bit_cast<std::uint64_t>(param));
}

template <typename F>
void parallel_for(int count, int threads, F&& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string format_param(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Gmm: return "gmm";
    case Regime::Heavy: return "heavy";
    case Regime::Block: return "block";
    case Regime::Synthesis: return "synthesis";
    case Regime::Rate: return "rate";
    case Regime::Saddle: return "saddle";
  }
  return "gmm";
}

Regime regime_from_string(const std::string& name) {
  if (name == "gmm") return Regime::Gmm;
  if (name == "heavy") return Regime::Heavy;
  if (name == "block") return Regime::Block;
  if (name == "synthesis") return Regime::Synthesis;
  if (name == "rate") return Regime::Rate;
  if (name == "saddle") return Regime::Saddle;
  throw ConfigError("unknown regime: " + name);
}

std::string to_string(ModelSelector m) {
  switch (m) {
    case ModelSelector::DtGan: return "dtgan";
    case ModelSelector::Gan: return "gan";
    case ModelSelector::Both: return "both";
  }
  return "both";
}

ModelSelector model_selector_from_string(const std::string& name) {
  if (name == "dtgan") return ModelSelector::DtGan;
  if (name == "gan") return ModelSelector::Gan;
  if (name == "both") return ModelSelector::Both;
  throw ConfigError("unknown model selector: " + name);
}

bool operator==(const GameConfig& a, const GameConfig& b) {
  return a.energy == b.energy && a.lambda == b.lambda && a.frob_bound == b.frob_bound &&
         a.row_penalty_weight == b.row_penalty_weight;
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  return a.outer_iters == b.outer_iters &&
         a.disc_steps_per_gen_step == b.disc_steps_per_gen_step &&
         a.step_size_D == b.step_size_D && a.step_size_T == b.step_size_T &&
         a.batch_size == b.batch_size && a.seed == b.seed &&
         a.project_rows_each_step == b.project_rows_each_step && a.log_every == b.log_every &&
         a.averaging_tail_fraction == b.averaging_tail_fraction;
}

bool operator==(const GanConfig& a, const GanConfig& b) {
  return a.latent_dim == b.latent_dim && a.hidden_dim == b.hidden_dim &&
         a.step_size_g == b.step_size_g && a.step_size_d == b.step_size_d &&
         a.batch_size == b.batch_size && a.iterations == b.iterations && a.seed == b.seed &&
         a.log_every == b.log_every;
}

bool operator==(const RateExperimentConfig& a, const RateExperimentConfig& b) {
  return a.sample_sizes == b.sample_sizes && a.trials == b.trials &&
         a.ref_multiple == b.ref_multiple && a.eval_latent_count == b.eval_latent_count &&
         a.ambient_dim == b.ambient_dim && a.atom_count == b.atom_count &&
         a.sparsity == b.sparsity && a.transform_rows == b.transform_rows &&
         a.min_singular == b.min_singular && a.game == b.game &&
         a.train_template == b.train_template && a.seed == b.seed;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.regime == b.regime && a.model == b.model && a.regime_params == b.regime_params &&
         a.heavy_base_separation == b.heavy_base_separation &&
         a.heavy_noise_scale == b.heavy_noise_scale && a.data_dim == b.data_dim &&
         a.atom_count == b.atom_count && a.sparsity == b.sparsity &&
         a.transform_rows == b.transform_rows && a.train_samples == b.train_samples &&
         a.eval_generated_samples == b.eval_generated_samples &&
         a.min_singular == b.min_singular && a.game == b.game && a.train == b.train &&
         a.gan == b.gan && a.rate == b.rate &&
         a.saddle_grid_resolution == b.saddle_grid_resolution &&
         a.output_path == b.output_path && a.seeds == b.seeds;
}

void ExperimentConfig::validate() const {
  require(!regime_params.empty(), "experiment needs at least one regime parameter");
  require(!seeds.empty(), "experiment needs at least one seed");
  require(data_dim >= 1 && atom_count >= 1, "dimensions must be >= 1");
  require(sparsity >= 1 && sparsity <= atom_count, "sparsity must satisfy 1 <= s <= atoms");
  require(train_samples >= 1, "train_samples must be >= 1");
  require(eval_generated_samples >= 1, "eval_generated_samples must be >= 1");
  train.validate();
  gan.validate();
  if (regime == Regime::Heavy) {
    for (double dof : regime_params) require(dof > 1.0, "heavy regime dof values must exceed 1");
  }
  if (regime == Regime::Block) {
    for (double s : regime_params) require(s >= 0.0, "block noise scales must be nonnegative");
  }
  if (regime == Regime::Gmm) {
    for (double s : regime_params) require(s >= 0.0, "separations must be nonnegative");
  }
  // Budget parity between the two models is part of the config contract.
  require(gan.iterations == train.outer_iters, "budget parity: gan.iterations != train.outer_iters");
  require(gan.batch_size == train.batch_size, "budget parity: gan.batch_size != train.batch_size");
}

ExperimentConfig ExperimentConfig::from_doc(const ConfigDoc& doc) {
  ExperimentConfig c;
  c.regime = regime_from_string(doc.get_string("experiment", "regime", "gmm"));
  c.model = model_selector_from_string(doc.get_string("experiment", "model", "both"));
  c.regime_params = doc.get_list("experiment", "params", c.regime_params);
  c.heavy_base_separation =
      doc.get_number("experiment", "heavy_base_separation", c.heavy_base_separation);
  c.heavy_noise_scale = doc.get_number("experiment", "heavy_noise_scale", c.heavy_noise_scale);
  c.data_dim = int(doc.get_number("experiment", "data_dim", c.data_dim));
  c.atom_count = int(doc.get_number("experiment", "atoms", c.atom_count));
  c.sparsity = int(doc.get_number("experiment", "sparsity", c.sparsity));
  c.transform_rows = int(doc.get_number("experiment", "transform_rows", c.transform_rows));
  c.train_samples = int(doc.get_number("experiment", "train_samples", c.train_samples));
  c.eval_generated_samples =
      int(doc.get_number("experiment", "eval_samples", c.eval_generated_samples));
  c.min_singular = doc.get_number("experiment", "min_singular", c.min_singular);
  c.output_path = doc.get_string("experiment", "output", c.output_path);
  {
    std::vector<double> fallback(c.seeds.begin(), c.seeds.end());
    std::vector<double> raw = doc.get_list("experiment", "seeds", fallback);
    c.seeds.clear();
    for (double s : raw) c.seeds.push_back(static_cast<std::uint64_t>(s));
  }

  c.game = GameConfig(
      energy_kind_from_string(doc.get_string("game", "energy", "l1")),
      doc.get_number("game", "lambda", 1.0),
      doc.get_number("game", "frob_bound", std::sqrt(double(c.atom_count))),
      doc.get_number("game", "row_penalty_weight", 0.0));

  c.train.outer_iters = int(doc.get_number("train", "outer_iters", c.train.outer_iters));
  c.train.disc_steps_per_gen_step =
      int(doc.get_number("train", "disc_steps_per_gen_step", c.train.disc_steps_per_gen_step));
  c.train.step_size_D = doc.get_number("train", "step_size_D", c.train.step_size_D);
  c.train.step_size_T = doc.get_number("train", "step_size_T", c.train.step_size_T);
  c.train.batch_size = int(doc.get_number("train", "batch_size", c.train.batch_size));
  c.train.project_rows_each_step =
      doc.get_bool("train", "project_rows_each_step", c.train.project_rows_each_step);
  c.train.log_every = int(doc.get_number("train", "log_every", c.train.log_every));
  c.train.averaging_tail_fraction =
      doc.get_number("train", "averaging_tail_fraction", c.train.averaging_tail_fraction);

  c.gan.latent_dim = int(doc.get_number("gan", "latent_dim", c.gan.latent_dim));
  c.gan.hidden_dim = int(doc.get_number("gan", "hidden_dim", c.gan.hidden_dim));
  c.gan.step_size_g = doc.get_number("gan", "step_size_g", c.gan.step_size_g);
  c.gan.step_size_d = doc.get_number("gan", "step_size_d", c.gan.step_size_d);
  c.gan.iterations = int(doc.get_number("gan", "iterations", c.train.outer_iters));
  c.gan.batch_size = int(doc.get_number("gan", "batch_size", c.train.batch_size));
  c.gan.log_every = int(doc.get_number("gan", "log_every", c.gan.log_every));

  if (doc.has("rate", "sample_sizes")) {
    c.rate.sample_sizes.clear();
    for (double v : doc.get_list("rate", "sample_sizes", {})) c.rate.sample_sizes.push_back(int(v));
  }
  c.rate.trials = int(doc.get_number("rate", "trials", c.rate.trials));
  c.rate.ref_multiple = int(doc.get_number("rate", "ref_multiple", c.rate.ref_multiple));
  c.rate.eval_latent_count =
      int(doc.get_number("rate", "eval_latent_count", c.rate.eval_latent_count));
  c.rate.seed = static_cast<std::uint64_t>(doc.get_number("rate", "seed", double(c.rate.seed)));
  c.saddle_grid_resolution =
      int(doc.get_number("saddle", "grid_resolution", c.saddle_grid_resolution));

  c.validate();
  return c;
}

ConfigDoc ExperimentConfig::to_doc() const {
  ConfigDoc doc;
  doc.set("experiment", "regime", ConfigValue::of(to_string(regime)));
  doc.set("experiment", "model", ConfigValue::of(to_string(model)));
  doc.set("experiment", "params", ConfigValue::of(regime_params));
  doc.set("experiment", "heavy_base_separation", ConfigValue::of(heavy_base_separation));
  doc.set("experiment", "heavy_noise_scale", ConfigValue::of(heavy_noise_scale));
  doc.set("experiment", "data_dim", ConfigValue::of(double(data_dim)));
  doc.set("experiment", "atoms", ConfigValue::of(double(atom_count)));
  doc.set("experiment", "sparsity", ConfigValue::of(double(sparsity)));
  doc.set("experiment", "transform_rows", ConfigValue::of(double(transform_rows)));
  doc.set("experiment", "train_samples", ConfigValue::of(double(train_samples)));
  doc.set("experiment", "eval_samples", ConfigValue::of(double(eval_generated_samples)));
  doc.set("experiment", "min_singular", ConfigValue::of(min_singular));
  doc.set("experiment", "output", ConfigValue::of(output_path));
  std::vector<double> seed_list(seeds.begin(), seeds.end());
  doc.set("experiment", "seeds", ConfigValue::of(seed_list));

  doc.set("game", "energy", ConfigValue::of(to_string(game.energy)));
  doc.set("game", "lambda", ConfigValue::of(game.lambda));
  doc.set("game", "frob_bound", ConfigValue::of(game.frob_bound));
  doc.set("game", "row_penalty_weight", ConfigValue::of(game.row_penalty_weight));

  doc.set("train", "outer_iters", ConfigValue::of(double(train.outer_iters)));
  doc.set("train", "disc_steps_per_gen_step",
          ConfigValue::of(double(train.disc_steps_per_gen_step)));
  doc.set("train", "step_size_D", ConfigValue::of(train.step_size_D));
  doc.set("train", "step_size_T", ConfigValue::of(train.step_size_T));
  doc.set("train", "batch_size", ConfigValue::of(double(train.batch_size)));
  doc.set("train", "project_rows_each_step", ConfigValue::of(train.project_rows_each_step));
  doc.set("train", "log_every", ConfigValue::of(double(train.log_every)));
  doc.set("train", "averaging_tail_fraction", ConfigValue::of(train.averaging_tail_fraction));

  doc.set("gan", "latent_dim", ConfigValue::of(double(gan.latent_dim)));
  doc.set("gan", "hidden_dim", ConfigValue::of(double(gan.hidden_dim)));
  doc.set("gan", "step_size_g", ConfigValue::of(gan.step_size_g));
  doc.set("gan", "step_size_d", ConfigValue::of(gan.step_size_d));
  doc.set("gan", "iterations", ConfigValue::of(double(gan.iterations)));
  doc.set("gan", "batch_size", ConfigValue::of(double(gan.batch_size)));
  doc.set("gan", "log_every", ConfigValue::of(double(gan.log_every)));

  std::vector<double> sizes(rate.sample_sizes.begin(), rate.sample_sizes.end());
  doc.set("rate", "sample_sizes", ConfigValue::of(sizes));
  doc.set("rate", "trials", ConfigValue::of(double(rate.trials)));
  doc.set("rate", "ref_multiple", ConfigValue::of(double(rate.ref_multiple)));
  doc.set("rate", "eval_latent_count", ConfigValue::of(double(rate.eval_latent_count)));
  doc.set("rate", "seed", ConfigValue::of(double(rate.seed)));
  doc.set("saddle", "grid_resolution", ConfigValue::of(double(saddle_grid_resolution)));
  return doc;
}

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "regime_param,model,err_mean,err_std,n_seeds\n";
  for (const ResultRow& r : rows) {
    out << r.regime_param << ',' << r.model << ',' << r.err_mean << ',' << r.err_std << ','
        << r.n_seeds << '\n';
  }
  return out.str();
}

Eigen::MatrixXd dictionary_sample_matrix(const Dictionary& d, const LatentSpec& spec, int count,
                                         RngState& rng) {
  require(count >= 0, "sample count must be nonnegative");
  Eigen::MatrixXd out(d.ambient_dim(), count);
  for (int i = 0; i < count; ++i) out.col(i) = synthesize(d, sample_latent(spec, rng));
  return out;
}

namespace {

std::vector<Eigen::VectorXd> generate_regime_data(const ExperimentConfig& c, double param,
                                                  RngState& rng) {
  switch (c.regime) {
    case Regime::Gmm:
      return sample_gmm(MixtureSpec(param), c.train_samples, rng);
    case Regime::Heavy:
      return sample_heavy(HeavyTailSpec(MixtureSpec(c.heavy_base_separation), param,
                                        c.heavy_noise_scale),
                          c.train_samples, rng);
    case Regime::Block:
      return sample_block(BlockMixtureSpec(param), c.train_samples, rng);
    case Regime::Synthesis: {
      GroundTruth gt = GroundTruth::random_well_conditioned(
          c.data_dim, c.atom_count, c.sparsity, c.game.frob_bound, rng, c.min_singular);
      return sample_synthesis(gt, c.train_samples, rng);
    }
    default:
      throw std::invalid_argument("regime has no data sampler; use verify for rate/saddle");
  }
}

struct CellOutcome {
  double err = 0.0;
  bool diverged = false;
  TrainTrajectory trajectory;
};

CellOutcome run_dtgan_cell(const ExperimentConfig& c, double param, std::uint64_t seed,
                           const Eigen::MatrixXd& data) {
  const LatentSpec spec(c.atom_count, c.sparsity);
  TrainConfig tc = c.train;
  tc.seed = derive_seed(seed, param, 0xd7a11ull);

  CellOutcome out;
  Dictionary trained;
  try {
    TrainResult res = train(data, spec, c.game, tc, c.transform_rows);
    trained = std::move(res.dictionary);
    out.trajectory = std::move(res.trajectory);
  } catch (const DivergenceError& e) {
    out.diverged = true;
    if (e.iteration() > 1) {
      TrainConfig shorter = tc;
      shorter.outer_iters = e.iteration() - 1;
      TrainResult res = train(data, spec, c.game, shorter, c.transform_rows);
      trained = std::move(res.dictionary);
      out.trajectory = std::move(res.trajectory);
    } else {
      trained = train_initial_players(data, spec, c.game, tc, c.transform_rows).first;
    }
  }

  RngState eval_rng = RngState::seeded(derive_seed(seed, param, 0xe7a1d7ull));
  const Eigen::MatrixXd generated =
      dictionary_sample_matrix(trained, spec, c.eval_generated_samples, eval_rng);
  out.err = recovery_error(generated, data);
  return out;
}

CellOutcome run_gan_cell(const ExperimentConfig& c, double param, std::uint64_t seed,
                         const Eigen::MatrixXd& data) {
  GanConfig gc = c.gan;
  gc.seed = derive_seed(seed, param, 0x6a41ull);

  CellOutcome out;
  MlpParams params;
  try {
    GanTrainResult res = gan_train(data, gc);
    params = std::move(res.params);
    out.trajectory = std::move(res.trajectory);
  } catch (const DivergenceError& e) {
    // A diverged run still contributes the error of its last finite
    // parameters; determinism makes the shortened rerun exact.
    out.diverged = true;
    if (e.iteration() > 1) {
      GanConfig shorter = gc;
      shorter.iterations = e.iteration() - 1;
      GanTrainResult res = gan_train(data, shorter);
      params = std::move(res.params);
      out.trajectory = std::move(res.trajectory);
    } else {
      params = gan_initial_params(static_cast<int>(data.rows()), gc);
    }
  }

  RngState eval_rng = RngState::seeded(derive_seed(seed, param, 0xe7a16aull));
  const Eigen::MatrixXd generated = gan_sample(params, c.eval_generated_samples, eval_rng);
  out.err = recovery_error(generated, data);
  return out;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& config, int threads) {
  config.validate();
  require(config.regime != Regime::Rate && config.regime != Regime::Saddle,
          "rate and saddle regimes are check suites; run them through verify()");

  std::vector<std::string> models;
  if (config.model == ModelSelector::DtGan || config.model == ModelSelector::Both)
    models.push_back("dtgan");
  if (config.model == ModelSelector::Gan || config.model == ModelSelector::Both)
    models.push_back("gan");

  struct Job {
    double param;
    std::string model;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double param : config.regime_params)
    for (const std::string& model : models)
      for (std::uint64_t seed : config.seeds) jobs.push_back({param, model, seed});

  std::vector<CellOutcome> outcomes(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), threads, [&](int i) {
    const Job& job = jobs[static_cast<std::size_t>(i)];
    RngState data_rng = RngState::seeded(derive_seed(job.seed, job.param, 0xda7aull));
    const Eigen::MatrixXd data =
        samples_to_matrix(generate_regime_data(config, job.param, data_rng));
    outcomes[static_cast<std::size_t>(i)] = job.model == "dtgan"
                                                ? run_dtgan_cell(config, job.param, job.seed, data)
                                                : run_gan_cell(config, job.param, job.seed, data);
  });

  if (!config.output_path.empty()) {
    std::filesystem::create_directories(config.output_path);
    const std::string hash = config_hash_hex(serialize_config(config.to_doc()));
    std::ofstream records(std::filesystem::path(config.output_path) / "metrics.jsonl");
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const Job& job = jobs[i];
      records << metric_record_json("recovery_error_" + to_string(config.regime) + "_" +
                                        format_param(job.param) + "_" + job.model,
                                    outcomes[i].err, hash, job.seed)
              << '\n';
      std::ostringstream name;
      name << "traj_" << to_string(config.regime) << '_' << format_param(job.param) << '_'
           << job.model << "_seed" << job.seed << ".csv";
      std::ofstream traj(std::filesystem::path(config.output_path) / name.str());
      write_trajectory_csv(traj, outcomes[i].trajectory);
    }
  }

  ResultTable table;
  std::size_t idx = 0;
  for (double param : config.regime_params) {
    for (const std::string& model : models) {
      ResultRow row;
      row.regime_param = param;
      row.model = model;
      row.n_seeds = static_cast<int>(config.seeds.size());
      row.iterations = model == "dtgan" ? config.train.outer_iters : config.gan.iterations;
      row.batch_size = model == "dtgan" ? config.train.batch_size : config.gan.batch_size;
      double sum = 0.0;
      std::vector<double> errs;
      for (std::size_t s = 0; s < config.seeds.size(); ++s, ++idx) {
        const CellOutcome& o = outcomes[idx];
        sum += o.err;
        errs.push_back(o.err);
        if (o.diverged) ++row.divergent_runs;
      }
      row.err_mean = sum / double(errs.size());
      double var = 0.0;
      for (double e : errs) var += (e - row.err_mean) * (e - row.err_mean);
      row.err_std = errs.size() > 1 ? std::sqrt(var / double(errs.size() - 1)) : 0.0;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

ExperimentConfig table1_config() {
  ExperimentConfig c;
  c.regime = Regime::Gmm;
  c.model = ModelSelector::Both;
  c.regime_params = {1.5, 2.5, 5.0};
  c.game = GameConfig::defaults_for(c.atom_count);
  c.gan.iterations = c.train.outer_iters;
  c.gan.batch_size = c.train.batch_size;
  return c;
}

ExperimentConfig table2_config() {
  ExperimentConfig c = table1_config();
  c.regime = Regime::Heavy;
  c.regime_params = {2.0, 3.0, 5.0};
  return c;
}

ExperimentConfig table3_config() {
  ExperimentConfig c = table1_config();
  c.regime = Regime::Block;
  c.regime_params = {0.2};
  return c;
}

namespace {

json table_to_json(const ResultTable& table) {
  json rows = json::array();
  for (const ResultRow& r : table.rows) {
    rows.push_back({{"regime_param", r.regime_param},
                    {"model", r.model},
                    {"err_mean", r.err_mean},
                    {"err_std", r.err_std},
                    {"n_seeds", r.n_seeds},
                    {"iterations", r.iterations},
                    {"batch_size", r.batch_size},
                    {"divergent_runs", r.divergent_runs}});
  }
  return rows;
}

const ResultRow& find_row(const ResultTable& t, double param, const std::string& model) {
  for (const ResultRow& r : t.rows) {
    if (r.regime_param == param && r.model == model) return r;
  }
  throw std::logic_error("result row not found");
}

}  // namespace

bool VerifyReport::all_pass() const {
  for (const CheckResult& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

std::string VerifyReport::to_json() const {
  json j;
  j["checks"] = json::array();
  for (const CheckResult& c : checks) {
    j["checks"].push_back(
        {{"name", c.name}, {"pass", c.pass}, {"details", json::parse(c.details_json)}});
  }
  j["all_pass"] = all_pass();
  return j.dump(2);
}

TableBundle reproduce_tables(const std::string& out_dir, int threads) {
  const auto started = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);

  TableBundle bundle;
  ExperimentConfig c1 = table1_config();
  ExperimentConfig c2 = table2_config();
  ExperimentConfig c3 = table3_config();
  c1.output_path = (std::filesystem::path(out_dir) / "table1_runs").string();
  c2.output_path = (std::filesystem::path(out_dir) / "table2_runs").string();
  c3.output_path = (std::filesystem::path(out_dir) / "table3_runs").string();

  bundle.table1 = run_experiment(c1, threads);
  bundle.table2 = run_experiment(c2, threads);
  bundle.table3 = run_experiment(c3, threads);

  for (auto [table, name] :
       {std::pair{&bundle.table1, "table1.csv"}, std::pair{&bundle.table2, "table2.csv"},
        std::pair{&bundle.table3, "table3.csv"}}) {
    std::ofstream out(std::filesystem::path(out_dir) / name);
    out << table->to_csv();
  }

  json summary;
  summary["table1"]["rows"] = table_to_json(bundle.table1);
  summary["table2"]["rows"] = table_to_json(bundle.table2);
  summary["table3"]["rows"] = table_to_json(bundle.table3);

  // Per-row ordinal comparison plus the absolute dictionary-model ceilings.
  bool parity = true;
  for (const ResultTable* t : {&bundle.table1, &bundle.table2, &bundle.table3}) {
    for (const ResultRow& r : t->rows) {
      for (const ResultRow& other : t->rows) {
        if (r.regime_param == other.regime_param && r.model != other.model) {
          parity = parity && r.iterations == other.iterations && r.batch_size == other.batch_size;
        }
      }
    }
  }
  summary["budget_parity"] = parity;

  {
    int beat = 0;
    bool ceiling = true;
    json per_row = json::array();
    for (double p : c1.regime_params) {
      const ResultRow& dt = find_row(bundle.table1, p, "dtgan");
      const ResultRow& gan = find_row(bundle.table1, p, "gan");
      const bool lt = dt.err_mean < gan.err_mean;
      beat += lt ? 1 : 0;
      ceiling = ceiling && dt.err_mean <= 0.2;
      per_row.push_back({{"separation", p}, {"dtgan_lt_gan", lt}});
    }
    summary["table1"]["dtgan_lt_gan_rows"] = per_row;
    summary["table1"]["dtgan_err_le_0.2_all"] = ceiling;
    summary["table1"]["dtgan_beats_gan_count"] = beat;
    summary["table1"]["pass"] = ceiling && beat >= 2;
  }
  {
    bool ceiling = true;
    int dt_divergent = 0;
    json per_row = json::array();
    for (double p : c2.regime_params) {
      const ResultRow& dt = find_row(bundle.table2, p, "dtgan");
      const ResultRow& gan = find_row(bundle.table2, p, "gan");
      ceiling = ceiling && dt.err_mean <= 0.15;
      dt_divergent += dt.divergent_runs;
      per_row.push_back({{"dof", p}, {"dtgan_lt_gan", dt.err_mean < gan.err_mean}});
    }
    summary["table2"]["dtgan_lt_gan_rows"] = per_row;
    summary["table2"]["dtgan_err_le_0.15_all"] = ceiling;
    summary["table2"]["dtgan_divergent_runs"] = dt_divergent;
    summary["table2"]["pass"] = ceiling && dt_divergent == 0;
  }
  {
    const ResultRow& dt = find_row(bundle.table3, 0.2, "dtgan");
    const ResultRow& gan = find_row(bundle.table3, 0.2, "gan");
    summary["table3"]["dtgan_lt_gan_rows"] =
        json::array({{{"noise_scale", 0.2}, {"dtgan_lt_gan", dt.err_mean < gan.err_mean}}});
    summary["table3"]["pass"] = dt.err_mean < gan.err_mean;
  }

  summary["elapsed_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  bundle.summary_json = summary.dump(2);
  std::ofstream out(std::filesystem::path(out_dir) / "summary.json");
  out << bundle.summary_json << '\n';
  return bundle;
}

// ---------------------------------------------------------------------------
// verify(): the oracle suite.
// ---------------------------------------------------------------------------

namespace {

SampleBatch random_batch(int n, int k, int s, int n_x, int n_z, RngState& rng) {
  Eigen::MatrixXd data(n, n_x);
  for (int j = 0; j < n_x; ++j)
    for (int i = 0; i < n; ++i) data(i, j) = rng.next_normal();
  const LatentSpec spec(k, s);
  std::vector<SparseLatent> latents;
  for (int j = 0; j < n_z; ++j) latents.push_back(sample_latent(spec, rng));
  return SampleBatch(std::move(data), std::move(latents));
}

double objective_total(const Dictionary& d, const Transform& t, const SampleBatch& b,
                       const GameConfig& cfg) {
  return empirical_objective(d, t, b, cfg).total;
}

// Central finite differences of the objective against both analytic
// gradients; returns the worst relative entry error.
std::pair<double, double> fd_gradient_errors(const Dictionary& d, const Transform& t,
                                             const SampleBatch& b, const GameConfig& cfg,
                                             double h) {
  const Eigen::MatrixXd gt = grad_transform(d, t, b, cfg);
  double worst_t = 0.0;
  for (Eigen::Index i = 0; i < t.entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.entries.cols(); ++j) {
      Transform tp = t, tm = t;
      tp.entries(i, j) += h;
      tm.entries(i, j) -= h;
      const double fd = (objective_total(d, tp, b, cfg) - objective_total(d, tm, b, cfg)) / (2 * h);
      worst_t = std::max(worst_t, std::abs(gt(i, j) - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  const Eigen::MatrixXd gd = grad_dictionary(d, t, b, cfg);
  double worst_d = 0.0;
  for (Eigen::Index i = 0; i < d.entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.entries.cols(); ++j) {
      Dictionary dp = d, dm = d;
      dp.entries(i, j) += h;
      dm.entries(i, j) -= h;
      const double fd = (objective_total(dp, t, b, cfg) - objective_total(dm, t, b, cfg)) / (2 * h);
      worst_d = std::max(worst_d, std::abs(gd(i, j) - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  return {worst_t, worst_d};
}

double fd_gan_error(RngState& rng) {
  GanConfig gc;
  gc.latent_dim = 2;
  gc.hidden_dim = 4;
  gc.batch_size = 2;
  gc.iterations = 1;

  // Central differences require a smooth point: resample until every hidden
  // pre-activation sits well away from the rectifier kink.
  MlpParams p;
  Eigen::MatrixXd real(2, 2), gen_z(2, 2), fake;
  for (;;) {
    p = MlpParams::init(2, gc, rng);
    for (Eigen::Index i = 0; i < p.g_b1.size(); ++i) p.g_b1[i] = 0.3 * rng.next_normal();
    for (Eigen::Index i = 0; i < p.g_b2.size(); ++i) p.g_b2[i] = 0.3 * rng.next_normal();
    for (Eigen::Index i = 0; i < p.d_b1.size(); ++i) p.d_b1[i] = 0.3 * rng.next_normal();
    p.d_b2 = 0.3 * rng.next_normal();
    Eigen::MatrixXd fake_z(2, 2);
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) {
        real(i, j) = rng.next_normal();
        fake_z(i, j) = rng.next_normal();
        gen_z(i, j) = rng.next_normal();
      }
    fake = gan_forward_generator(p, fake_z);
    const double margin = 1e-3;
    const Eigen::MatrixXd g_a1 = (p.g_w1 * gen_z).colwise() + p.g_b1;
    const Eigen::MatrixXd a_real = (p.d_w1 * real).colwise() + p.d_b1;
    const Eigen::MatrixXd a_fake = (p.d_w1 * fake).colwise() + p.d_b1;
    const Eigen::MatrixXd a_gen =
        (p.d_w1 * gan_forward_generator(p, gen_z)).colwise() + p.d_b1;
    if (g_a1.cwiseAbs().minCoeff() > margin && a_real.cwiseAbs().minCoeff() > margin &&
        a_fake.cwiseAbs().minCoeff() > margin && a_gen.cwiseAbs().minCoeff() > margin) {
      break;
    }
  }
  const DiscGrads dg = gan_disc_grads(p, real, fake);
  const GenGrads gg = gan_gen_grads(p, gen_z);
  const double h = 1e-5;
  double worst = 0.0;

  auto fd_disc = [&](double* slot, double analytic) {
    const double saved = *slot;
    *slot = saved + h;
    const double up = gan_disc_loss(p, real, fake);
    *slot = saved - h;
    const double down = gan_disc_loss(p, real, fake);
    *slot = saved;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(analytic - fd) / std::max(1.0, std::abs(fd)));
  };
  for (Eigen::Index i = 0; i < p.d_w1.size(); ++i) fd_disc(p.d_w1.data() + i, dg.d_w1(i));
  for (Eigen::Index i = 0; i < p.d_b1.size(); ++i) fd_disc(p.d_b1.data() + i, dg.d_b1(i));
  for (Eigen::Index i = 0; i < p.d_w2.size(); ++i) fd_disc(p.d_w2.data() + i, dg.d_w2(i));
  fd_disc(&p.d_b2, dg.d_b2);

  auto fd_gen = [&](double* slot, double analytic) {
    const double saved = *slot;
    *slot = saved + h;
    const double up = gan_gen_loss(p, gen_z);
    *slot = saved - h;
    const double down = gan_gen_loss(p, gen_z);
    *slot = saved;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(analytic - fd) / std::max(1.0, std::abs(fd)));
  };
  for (Eigen::Index i = 0; i < p.g_w1.size(); ++i) fd_gen(p.g_w1.data() + i, gg.g_w1(i));
  for (Eigen::Index i = 0; i < p.g_b1.size(); ++i) fd_gen(p.g_b1.data() + i, gg.g_b1(i));
  for (Eigen::Index i = 0; i < p.g_w2.size(); ++i) fd_gen(p.g_w2.data() + i, gg.g_w2(i));
  for (Eigen::Index i = 0; i < p.g_b2.size(); ++i) fd_gen(p.g_b2.data() + i, gg.g_b2(i));
  return worst;
}

/// The 1-D check game: every data sample is the scalar 2, every latent the
/// scalar 1.
SampleBatch one_dim_game_batch(int n_x, int n_z) {
  Eigen::MatrixXd data = Eigen::MatrixXd::Constant(1, n_x, 2.0);
  std::vector<SparseLatent> latents;
  for (int i = 0; i < n_z; ++i) {
    latents.emplace_back(Eigen::VectorXd::Constant(1, 1.0), std::vector<int>{0});
  }
  return SampleBatch(std::move(data), std::move(latents));
}

}  // namespace

VerifyReport verify(const std::string& out_dir, int threads) {
  VerifyReport report;

  {  // Gradient correctness against central finite differences.
    RngState rng = RngState::seeded(91);
    double worst_t = 0.0, worst_d = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
      const int n = 2 + int(rng.next_below(3));
      const int k = 1 + int(rng.next_below(4));
      const int m = 1 + int(rng.next_below(3));
      const int s = 1 + int(rng.next_below(std::uint64_t(k)));
      SampleBatch batch = random_batch(n, k, s, 3 + int(rng.next_below(4)),
                                       3 + int(rng.next_below(4)), rng);
      Eigen::MatrixXd de(n, k), te(m, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) de(i, j) = rng.next_normal();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) te(i, j) = rng.next_normal();
      const GameConfig cfg(EnergyKind::L2SQ, rng.next_double(), std::sqrt(double(k)));
      const auto [et, ed] =
          fd_gradient_errors(Dictionary(de, cfg.frob_bound), Transform(te), batch, cfg, 1e-5);
      worst_t = std::max(worst_t, et);
      worst_d = std::max(worst_d, ed);
    }
    double worst_gan = 0.0;
    for (int inst = 0; inst < 5; ++inst) worst_gan = std::max(worst_gan, fd_gan_error(rng));

    const bool pass = worst_t < 1e-5 && worst_d < 1e-5 && worst_gan < 1e-4;
    json details = {{"grad_transform_max_rel_err", worst_t},
                    {"grad_dictionary_max_rel_err", worst_d},
                    {"gan_backprop_max_rel_err", worst_gan},
                    {"tolerance_dtgan", 1e-5},
                    {"tolerance_gan", 1e-4}};
    report.checks.push_back({"gradient_checks", pass, details.dump()});
  }

  {  // Grid-oracle saddle agreement on the 1-D game.
    const SampleBatch oracle_batch = one_dim_game_batch(8, 8);
    const GameConfig cfg(EnergyKind::L1, 1.0, 3.0);
    const SaddlePoint grid = bruteforce_saddle(1, 1, 1, oracle_batch, cfg, 601);

    const Eigen::MatrixXd data = Eigen::MatrixXd::Constant(1, 256, 2.0);
    TrainConfig tc;
    tc.outer_iters = 2000;
    tc.seed = 7;
    const TrainResult run = train(data, LatentSpec(1, 1), cfg, tc);
    const double trainer_value =
        empirical_objective(run.dictionary, run.transform, oracle_batch, cfg).total;

    InnerBudget budget;
    budget.transform_steps = 400;
    budget.dictionary_steps = 400;
    const double gap = nash_gap(grid.dictionary, grid.transform, oracle_batch, cfg, budget);

    const bool pass = std::abs(trainer_value - grid.value) <= 5e-2 && gap < 1e-3 && gap >= -1e-6;
    json details = {{"grid_value", grid.value},
                    {"trainer_value", trainer_value},
                    {"abs_difference", std::abs(trainer_value - grid.value)},
                    {"value_tolerance", 5e-2},
                    {"nash_gap_at_grid_saddle", gap},
                    {"gap_tolerance", 1e-3}};
    report.checks.push_back({"saddle_oracle", pass, details.dump()});
  }

  {  // Identifiability on exact synthesis data.
    const auto started = std::chrono::steady_clock::now();
    const int n_seeds = 5;
    std::vector<double> residuals(n_seeds);
    parallel_for(n_seeds, threads, [&](int i) {
      const IdentifiabilitySetup setup = identifiability_setup();
      RngState rng = RngState::seeded(1000 + std::uint64_t(i));
      GroundTruth gt = GroundTruth::random_well_conditioned(2, 2, 1, setup.game.frob_bound, rng,
                                                            setup.min_singular);
      const Eigen::MatrixXd data =
          samples_to_matrix(sample_synthesis(gt, setup.data_samples, rng));
      TrainConfig tc = setup.train;
      tc.seed = 500 + std::uint64_t(i);
      const TrainResult run = train(data, gt.latent, setup.game, tc, setup.transform_rows);
      residuals[i] = dictionary_recovery(run.dictionary, gt.d0).residual;
    });
    int hits = 0;
    for (double r : residuals) hits += r < 0.1 ? 1 : 0;
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const bool pass = hits >= 4 && elapsed < 30.0;
    json details = {{"residuals", residuals},
                    {"seeds_below_0.1", hits},
                    {"required", 4},
                    {"elapsed_seconds", elapsed},
                    {"time_limit_seconds", 30.0}};
    report.checks.push_back({"identifiability", pass, details.dump()});
  }

  {  // Finite-sample rate fit.
    const auto started = std::chrono::steady_clock::now();
    RateExperimentConfig rc;
    const RateExperimentResult rr = rate_experiment(rc);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const bool in_band = rr.fit.fitted_exponent >= -0.7 && rr.fit.fitted_exponent <= -0.3;
    const bool pass = in_band && elapsed < 300.0;
    json details = {{"fitted_exponent", rr.fit.fitted_exponent},
                    {"pass_interval", {-0.7, -0.3}},
                    {"sample_sizes", rr.fit.sample_sizes},
                    {"gaps", rr.fit.gaps},
                    {"excluded_trials", rr.excluded_trials},
                    {"elapsed_seconds", elapsed},
                    {"time_limit_seconds", 300.0}};
    report.checks.push_back({"rate_fit", pass, details.dump()});
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::filesystem::path(out_dir) / "verify.json");
    out << report.to_json() << '\n';
  }
  return report;
}

IdentifiabilitySetup identifiability_setup() {
  IdentifiabilitySetup s;
  s.train.outer_iters = 5000;
  s.train.disc_steps_per_gen_step = 5;
  s.train.step_size_D = 1.5e-3;
  s.train.step_size_T = 1e-2;
  s.train.batch_size = 256;
  s.train.log_every = 500;
  s.train.averaging_tail_fraction = 0.5;
  return s;
}

}  // namespace dtgan
