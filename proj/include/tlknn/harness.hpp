#pragma once

// Experiment configuration, family presets, the seeded sweep runner and the
// drivers behind the command-line subcommands.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tlknn/adaptive.hpp"
#include "tlknn/diagnostics.hpp"
#include "tlknn/records.hpp"
#include "tlknn/synth.hpp"

namespace tlknn {

/// Invalid or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FamilySpec {
  std::string id;
  nlohmann::json params = nlohmann::json::object();
};

enum class KPolicyKind { oracle_optimal, fixed, adaptive_lepski, cover_adaptive };

struct KPolicy {
  KPolicyKind kind = KPolicyKind::oracle_optimal;
  std::size_t k = 0;  // fixed policy only

  std::string name() const;  // "oracle_optimal", "fixed(5)", ...
  bool uses_cover() const { return kind == KPolicyKind::cover_adaptive; }
};

/// Accepts "oracle_optimal", "adaptive_lepski", "cover_adaptive", "fixed(k)"
/// or "fixed:k".
KPolicy parse_k_policy(const std::string& text);

struct GammaOptions {
  std::size_t n = 50000;       // points per marginal
  std::size_t probes = 200;    // drawn from the target marginal
  std::size_t min_count = 10;
  std::vector<double> radii;   // empty means default_gamma_radii()
};

struct ExperimentConfig {
  FamilySpec family;
  std::vector<std::pair<std::size_t, std::size_t>> sweep;  // (n_P, n_Q) points
  std::size_t trials = 1;
  KPolicy k_policy;
  std::size_t m_eval = 10000;
  std::uint64_t seed = 0;
  double delta = 0.05;
  std::optional<std::size_t> v_b;  // default 2d + 1
  std::string output;
  bool record_wall_time = false;
  std::size_t workers = 0;         // 0 means hardware concurrency
  std::size_t max_traces = 0;      // per trial, adapt subcommand only
  GammaOptions gamma;

  /// Throws ConfigError. The sweep may be empty here; drivers that need it
  /// call require_sweep().
  void validate() const;
  void require_sweep() const;

  AdaptiveConfig adaptive(std::size_t dim) const;

  /// Canonical JSON form; its dump is what the config hash covers.
  nlohmann::json to_json() const;
};

/// The sweep is either {"n_P": [...], "n_Q": [...]} (all combinations) or
/// {"points": [[n_P, n_Q], ...]}. Unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

std::vector<std::string> available_presets();

/// Builds the preset family for one sweep point. Only the lower-bound preset
/// with the minimax schedule depends on (n_P, n_Q); its sigma comes from
/// family_seed unless the parameters pin "sigma_seed". Unknown ids and bad
/// parameters raise ConfigError.
FamilyPtr make_preset_family(const FamilySpec& spec, std::size_t n_source,
                             std::size_t n_target, std::uint64_t family_seed);

/// Seed of trial t at a sweep point; independent of every other trial.
std::uint64_t trial_seed(std::uint64_t base, std::size_t n_source, std::size_t n_target,
                         std::size_t trial);

struct TrialData {
  FamilyPtr family;
  LabeledPoints source;
  LabeledPoints target;
  std::uint64_t eval_seed = 0;

  /// Source labelled, target labelled (or unlabelled when requested).
  TransferSample sample(bool target_labeled) const;
};

TrialData draw_trial(const ExperimentConfig& cfg, std::size_t n_source, std::size_t n_target,
                     std::size_t trial);

struct TraceRow {
  std::size_t n_source = 0, n_target = 0, trial = 0, query = 0;
  std::vector<double> x;
  LepskiTrace trace;
  Label bayes_label = 0;
};

struct TrialResult {
  RateRecord record;
  std::vector<TraceRow> traces;
};

TrialResult run_trial(const ExperimentConfig& cfg, std::size_t n_source, std::size_t n_target,
                      std::size_t trial);

/// All (n_P, n_Q, trial) records sorted by that key. Deterministic in cfg.
std::vector<RateRecord> run_sweep(const ExperimentConfig& cfg);
std::vector<TrialResult> run_sweep_detailed(const ExperimentConfig& cfg);

/// Comment lines stamped on sweep CSVs: config hash, family, policy.
std::vector<std::string> sweep_comments(const ExperimentConfig& cfg);

/// One row per cover level: n_P,n_Q,trial,level,k,added,total_queries.
void write_cover_report(const ExperimentConfig& cfg, std::ostream& out);

void write_traces_csv(const std::vector<TrialResult>& results, std::ostream& out);

struct GammaRun {
  std::size_t trial = 0;
  GammaResult result;
};

std::vector<GammaRun> run_gamma(const ExperimentConfig& cfg);
void write_gamma_report(const ExperimentConfig& cfg, const std::vector<GammaRun>& runs,
                        std::ostream& out);

/// Writes a self-contained Python/matplotlib script plotting log-log excess
/// error against n_P + n_Q, one series per policy block when the CSV holds
/// several, otherwise one per n_Q (or per n_P when n_P is fixed). Running
/// the script writes a PNG next to it (or to its first argument).
void emit_plot_script(const std::string& records_path, const std::string& out_path);
std::string plot_script(const ParsedRecords& records, const std::string& image_path,
                        const std::string& title);

}  // namespace tlknn
