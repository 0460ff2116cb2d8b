#include <CLI11.hpp>

#include "dtgan/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// The DTGAN_OUT_DIR environment variable overrides any configured output
// directory.
std::string resolve_out_dir(const std::string& requested) {
  if (const char* env = std::getenv("DTGAN_OUT_DIR"); env && *env) return env;
  return requested;
}

void print_table(const dtgan::ResultTable& table) {
  std::cout << table.to_csv();
}

int run_command(const std::string& config_path, std::uint64_t seed_override, bool has_seed,
                const std::string& out_override, int threads) {
  dtgan::ConfigDoc doc = dtgan::parse_config(read_file(config_path));
  dtgan::ExperimentConfig config = dtgan::ExperimentConfig::from_doc(doc);
  if (has_seed) config.seeds = {seed_override};
  if (!out_override.empty()) config.output_path = out_override;
  config.output_path = resolve_out_dir(config.output_path);

  if (config.regime == dtgan::Regime::Rate) {
    const dtgan::RateExperimentResult r = dtgan::rate_experiment(config.rate);
    std::cout << "fitted_exponent," << r.fit.fitted_exponent << '\n';
    for (std::size_t i = 0; i < r.fit.sample_sizes.size(); ++i) {
      std::cout << "gap_N" << r.fit.sample_sizes[i] << ',' << r.fit.gaps[i] << '\n';
    }
    if (!config.output_path.empty()) {
      std::filesystem::create_directories(config.output_path);
      std::ofstream out(std::filesystem::path(config.output_path) / "rate.json");
      const std::string hash = dtgan::config_hash_hex(serialize_config(config.to_doc()));
      out << dtgan::metric_record_json("rate_fitted_exponent", r.fit.fitted_exponent, hash,
                                       config.rate.seed)
          << '\n';
    }
    return 0;
  }
  if (config.regime == dtgan::Regime::Saddle) {
    // The canned 1-D check game lives in verify(); run it there.
    const dtgan::VerifyReport report = dtgan::verify(config.output_path, threads);
    for (const dtgan::CheckResult& c : report.checks) {
      if (c.name == "saddle_oracle") {
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ' ' << c.details_json << '\n';
      }
    }
    return report.all_pass() ? 0 : 1;
  }

  const dtgan::ResultTable table = dtgan::run_experiment(config, threads);
  print_table(table);
  if (!config.output_path.empty()) {
    std::ofstream out(std::filesystem::path(config.output_path) / "results.csv");
    out << table.to_csv();
  }
  return 0;
}

int dump_data_command(const std::string& config_path, const std::string& out_csv, int samples) {
  dtgan::ConfigDoc doc = dtgan::parse_config(read_file(config_path));
  dtgan::ExperimentConfig config = dtgan::ExperimentConfig::from_doc(doc);
  const double param = config.regime_params.front();
  dtgan::RngState rng = dtgan::RngState::seeded(config.seeds.front());
  const int count = samples > 0 ? samples : config.train_samples;

  std::vector<Eigen::VectorXd> data;
  switch (config.regime) {
    case dtgan::Regime::Gmm:
      data = dtgan::sample_gmm(dtgan::MixtureSpec(param), count, rng);
      break;
    case dtgan::Regime::Heavy:
      data = dtgan::sample_heavy(
          dtgan::HeavyTailSpec(dtgan::MixtureSpec(config.heavy_base_separation), param,
                               config.heavy_noise_scale),
          count, rng);
      break;
    case dtgan::Regime::Block:
      data = dtgan::sample_block(dtgan::BlockMixtureSpec(param), count, rng);
      break;
    case dtgan::Regime::Synthesis: {
      dtgan::GroundTruth gt = dtgan::GroundTruth::random_well_conditioned(
          config.data_dim, config.atom_count, config.sparsity, config.game.frob_bound, rng,
          config.min_singular);
      data = dtgan::sample_synthesis(gt, count, rng);
      break;
    }
    default:
      std::cerr << "dump-data supports the gmm, heavy, block and synthesis regimes\n";
      return 2;
  }
  std::ofstream out(out_csv);
  if (!out) {
    std::cerr << "cannot open " << out_csv << " for writing\n";
    return 2;
  }
  dtgan::dump_samples_csv(out, data);
  std::cout << "wrote " << data.size() << " samples to " << out_csv << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dtgan: dictionary-transform adversarial training testbed"};
  app.require_subcommand(1);
  app.fallthrough(true);

  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  app.add_option("--threads", threads, "max concurrent experiment cells");

  std::string config_path, out_dir, out_csv;
  std::uint64_t seed = 0;
  int samples = 0;

  CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "config file (TOML-style sections)")->required();
  CLI::Option* seed_opt = run->add_option("--seed", seed, "replace the config seed list");
  run->add_option("--out", out_dir, "override the output directory");

  CLI::App* tables = app.add_subcommand("reproduce-tables", "run the three canned benchmark tables");
  tables->add_option("out_dir", out_dir, "output directory")->required();

  CLI::App* verify_cmd = app.add_subcommand("verify", "run the oracle and property suite");
  verify_cmd->add_option("out_dir", out_dir, "output directory")->required();

  CLI::App* dump = app.add_subcommand("dump-data", "sample a dataset and write it as CSV");
  dump->add_option("config", config_path, "config file")->required();
  dump->add_option("out_csv", out_csv, "destination CSV file")->required();
  dump->add_option("--samples", samples, "override the sample count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(run)) {
      return run_command(config_path, seed, seed_opt->count() > 0, out_dir, threads);
    }
    if (app.got_subcommand(tables)) {
      const std::string dir = resolve_out_dir(out_dir);
      const dtgan::TableBundle bundle = dtgan::reproduce_tables(dir, threads);
      std::cout << "table1\n" << bundle.table1.to_csv();
      std::cout << "table2\n" << bundle.table2.to_csv();
      std::cout << "table3\n" << bundle.table3.to_csv();
      std::cout << "summary written to " << dir << "/summary.json\n";
      return 0;
    }
    if (app.got_subcommand(verify_cmd)) {
      const std::string dir = resolve_out_dir(out_dir);
      const dtgan::VerifyReport report = dtgan::verify(dir, threads);
      for (const dtgan::CheckResult& c : report.checks) {
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << '\n';
      }
      std::cout << "report written to " << dir << "/verify.json\n";
      return report.all_pass() ? 0 : 1;
    }
    if (app.got_subcommand(dump)) {
      return dump_data_command(config_path, out_csv, samples);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
