// Command-line front end: sweep, cover, adapt, gamma and plot subcommands.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tlknn/harness.hpp"
#include "tlknn/log.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
};

tlknn::ExperimentConfig load(const std::string& path, const Overrides& o) {
  tlknn::ExperimentConfig cfg = tlknn::load_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.out) cfg.output = *o.out;
  if (o.workers) cfg.workers = *o.workers;
  cfg.validate();
  return cfg;
}

// Writes through `body` to cfg.output, or stdout when it is empty.
template <typename Body>
void with_output(const std::string& path, Body body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    std::cout.flush();
    if (!std::cout) throw std::runtime_error("write to stdout failed");
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  body(out);
  out.flush();
  if (!out)
    throw std::runtime_error("write to '" + path + "' failed; partial output may remain there");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonparametric transfer learning experiments: pooled k-NN, k-2k covers, "
               "adaptive k selection"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  Overrides ov;
  bool verbose = false, quiet = false;
  app.add_option("--seed", ov.seed, "Override the config seed");
  app.add_option("--trials", ov.trials, "Override the number of trials")->check(CLI::PositiveNumber);
  app.add_option("--out", ov.out, "Override the output path ('-' for stdout)");
  app.add_option("--workers", ov.workers, "Worker threads (0 = all cores)");
  app.add_flag("-v,--verbose", verbose, "Log informational messages");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  std::string config_path, records_path, plot_out, traces_path;
  std::size_t max_traces = 100;

  auto* sweep = app.add_subcommand("sweep", "Run a rate sweep and write the records CSV");
  sweep->add_option("config", config_path, "Experiment config (JSON)")->required();

  auto* cover = app.add_subcommand("cover", "Report cover levels and label requests as CSV");
  cover->add_option("config", config_path, "Experiment config (JSON)")->required();

  auto* adapt = app.add_subcommand("adapt", "Run the cover-based adaptive classifier");
  adapt->add_option("config", config_path, "Experiment config (JSON)")->required();
  adapt->add_option("--traces", traces_path, "Write per-query Lepski traces to this CSV");
  adapt->add_option("--max-traces", max_traces, "Traced queries per trial")->capture_default_str();

  auto* gamma = app.add_subcommand("gamma", "Estimate the transfer exponent of a family");
  gamma->add_option("config", config_path, "Experiment config (JSON)")->required();

  auto* plot = app.add_subcommand("plot", "Emit a plotting script for a records CSV");
  plot->add_option("records", records_path, "Records CSV")->required();
  plot->add_option("out", plot_out, "Script path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (quiet) tlknn::set_log_level(tlknn::LogLevel::quiet);
  if (verbose) tlknn::set_log_level(tlknn::LogLevel::info);

  try {
    if (*plot) {
      tlknn::emit_plot_script(records_path, plot_out);
      return 0;
    }
    tlknn::ExperimentConfig cfg = load(config_path, ov);
    if (*sweep) {
      cfg.require_sweep();
      const auto records = tlknn::run_sweep(cfg);
      with_output(cfg.output, [&](std::ostream& out) {
        tlknn::write_records_csv(out, records, tlknn::sweep_comments(cfg));
      });
    } else if (*cover) {
      with_output(cfg.output, [&](std::ostream& out) { tlknn::write_cover_report(cfg, out); });
    } else if (*adapt) {
      cfg.require_sweep();
      cfg.k_policy.kind = tlknn::KPolicyKind::cover_adaptive;
      cfg.max_traces = traces_path.empty() ? 0 : max_traces;
      const auto results = tlknn::run_sweep_detailed(cfg);
      std::vector<tlknn::RateRecord> records;
      for (const auto& r : results) records.push_back(r.record);
      with_output(cfg.output, [&](std::ostream& out) {
        tlknn::write_records_csv(out, records, tlknn::sweep_comments(cfg));
      });
      if (!traces_path.empty())
        with_output(traces_path, [&](std::ostream& out) { tlknn::write_traces_csv(results, out); });
    } else if (*gamma) {
      const auto runs = tlknn::run_gamma(cfg);
      with_output(cfg.output,
                  [&](std::ostream& out) { tlknn::write_gamma_report(cfg, runs, out); });
    }
  } catch (const tlknn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
