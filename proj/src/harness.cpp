#include "tlknn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "tlknn/classifier.hpp"
#include "tlknn/cover.hpp"
#include "tlknn/log.hpp"

namespace tlknn {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

std::size_t as_count(const json& j, const std::string& field, bool allow_zero = false) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() &&
                                 j.get<std::int64_t>() < 0))
    bad_field(field, "expected a non-negative integer");
  const auto v = j.get<std::uint64_t>();
  if (v == 0 && !allow_zero) bad_field(field, "must be >= 1");
  return static_cast<std::size_t>(v);
}

double as_number(const json& j, const std::string& field) {
  if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "infinity"))
    return kInfiniteGamma;
  if (!j.is_number()) bad_field(field, "expected a number");
  return j.get<double>();
}

// Reads one preset's parameter map and rejects keys it never asked for.
class ParamReader {
 public:
  ParamReader(const std::string& preset, const json& params) : preset_(preset), p_(params) {
    if (!p_.is_object()) throw ConfigError("family '" + preset + "': params must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return p_.contains(key);
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? as_number(p_.at(key), field(key)) : fallback;
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? as_count(p_.at(key), field(key)) : fallback;
  }
  std::uint64_t seed(const std::string& key) {
    return static_cast<std::uint64_t>(as_count(p_.at(key), field(key), true));
  }
  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    if (!p_.at(key).is_string()) bad_field(field(key), "expected a string");
    return p_.at(key).get<std::string>();
  }
  void finish() const {
    for (const auto& [key, value] : p_.items())
      if (!seen_.count(key))
        throw ConfigError("family '" + preset_ + "': unknown parameter '" + key + "'");
  }

 private:
  std::string field(const std::string& key) const { return "family.params." + key; }

  std::string preset_;
  const json& p_;
  std::set<std::string> seen_;
};

const std::vector<std::string> kPresets = {"margin_singularity", "dimension_gap",
                                           "disjoint_support", "lowerbound"};

std::string preset_list() {
  std::string s;
  for (const auto& p : kPresets) s += (s.empty() ? "" : ", ") + p;
  return s;
}

// Families that do not depend on the sweep point or the trial seed.
bool preset_is_static(const FamilySpec& spec) {
  if (spec.id != "lowerbound") return true;
  const auto& p = spec.params;
  const bool fixed = p.contains("schedule") && p.at("schedule") == "fixed";
  return fixed && p.contains("sigma_seed");
}

FamilyPtr build_preset(const FamilySpec& spec, std::size_t n_source, std::size_t n_target,
                       std::uint64_t family_seed) {
  ParamReader in(spec.id, spec.params);
  FamilyPtr family;
  if (spec.id == "margin_singularity") {
    const double gamma = in.number("gamma", 0.0);
    const double alpha = in.number("alpha", 1.0);
    const double c_alpha = in.number("c_alpha", 1.0);
    in.finish();
    family = make_margin_singularity_family(gamma, alpha, c_alpha);
  } else if (spec.id == "dimension_gap") {
    const std::size_t d_p = in.count("d_P", 2);
    const std::size_t d_q = in.count("d_Q", 1);
    const double alpha = in.number("alpha", 1.0);
    const double c_alpha = in.number("c_alpha", 1.0);
    in.finish();
    family = make_dimension_gap_family(d_p, d_q, alpha, c_alpha);
  } else if (spec.id == "disjoint_support") {
    const std::size_t dim = in.count("dim", 1);
    const double alpha = in.number("alpha", 1.0);
    const double c_alpha = in.number("c_alpha", 1.0);
    in.finish();
    family = make_disjoint_support_family(dim, alpha, c_alpha);
  } else if (spec.id == "lowerbound") {
    FamilyParams params;
    params.gamma = in.number("gamma", 0.0);
    params.alpha = in.number("alpha", 1.0);
    params.c_alpha = in.number("c_alpha", 1.0);
    params.beta = in.number("beta", 1.0);
    params.dim = in.count("dim", 1);
    const std::string regime = in.text("regime", "dm");
    if (regime == "dm") params.regime = Regime::dm;
    else if (regime == "bcn") params.regime = Regime::bcn;
    else bad_field("family.params.regime", "expected \"dm\" or \"bcn\"");
    const std::string schedule = in.text("schedule", "minimax");
    const std::uint64_t sigma_seed = in.has("sigma_seed") ? in.seed("sigma_seed") : family_seed;
    LowerBoundSpec lb;
    if (schedule == "minimax") {
      const double c_w = in.number("c_w", 1.0);
      in.finish();
      lb = minimax_lowerbound_spec(params, n_source, n_target, c_w, sigma_seed);
    } else if (schedule == "fixed") {
      if (!in.has("r") || !in.has("m") || !in.has("w"))
        throw ConfigError("family 'lowerbound': the fixed schedule needs r, m and w");
      lb.r = in.number("r", 0.0);
      lb.m = in.count("m", 1);
      lb.w = in.number("w", 0.0);
      in.finish();
      lb.params = params;
      Rng rng(sigma_seed);
      lb.sigma.resize(lb.m);
      for (auto& s : lb.sigma) s = rng.bernoulli(0.5) ? 1 : -1;
    } else {
      bad_field("family.params.schedule", "expected \"minimax\" or \"fixed\"");
    }
    family = make_lowerbound_family(lb);
  } else {
    throw ConfigError("unknown family preset '" + spec.id + "'; available presets: " +
                      preset_list());
  }
  return family;
}

json sweep_to_json(const std::vector<std::pair<std::size_t, std::size_t>>& sweep) {
  json pts = json::array();
  for (const auto& [p, q] : sweep) pts.push_back({p, q});
  return pts;
}

std::size_t median_of(std::vector<std::size_t> v) {
  if (v.empty()) return 0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

TrialData draw_trial_with(const ExperimentConfig& cfg, const FamilyPtr& fixed_family,
                          std::size_t n_source, std::size_t n_target, std::size_t trial) {
  const std::uint64_t ts = trial_seed(cfg.seed, n_source, n_target, trial);
  TrialData data;
  data.family = fixed_family ? fixed_family
                             : make_preset_family(cfg.family, n_source, n_target,
                                                  derive_seed(ts, {4}));
  data.source = data.family->sample_source(n_source, derive_seed(ts, {1}));
  data.target = data.family->sample_target(n_target, derive_seed(ts, {2}));
  data.eval_seed = derive_seed(ts, {3});
  return data;
}

TrialResult run_trial_with(const ExperimentConfig& cfg, const FamilyPtr& fixed_family,
                           std::size_t n_source, std::size_t n_target, std::size_t trial) {
  const auto start = std::chrono::steady_clock::now();
  const TrialData data = draw_trial_with(cfg, fixed_family, n_source, n_target, trial);
  const TransferFamily& family = *data.family;
  const std::size_t n = n_source + n_target;

  TrialResult result;
  RateRecord& rec = result.record;
  rec.n_source = n_source;
  rec.n_target = n_target;
  rec.trial = trial;

  ExcessError err;
  const KPolicy& policy = cfg.k_policy;
  if (policy.kind == KPolicyKind::oracle_optimal || policy.kind == KPolicyKind::fixed) {
    const PooledModel model = fit_pooled(data.sample(true));
    std::size_t k = 0;
    if (policy.kind == KPolicyKind::oracle_optimal) {
      k = optimal_k(n_source, n_target, RateSpec(family.params()));
    } else {
      k = std::min(policy.k, n);
      if (k < policy.k)
        log_warning("fixed k=" + std::to_string(policy.k) + " exceeds n=" + std::to_string(n) +
                    "; using k=n");
    }
    rec.k_used = k;
    err = excess_error_mc([&](std::span<const double> x) { return model.predict(x, k); }, family,
                          cfg.m_eval, data.eval_seed);
  } else {
    const AdaptiveConfig acfg = cfg.adaptive(family.params().dim);
    std::optional<CoverBasedClassifier> cover_clf;
    std::optional<LepskiClassifier> plain;
    if (policy.uses_cover()) {
      const auto& labels = data.target.labels;
      TargetLabeler labeler = [&](std::size_t pooled) -> Label {
        if (pooled < n_source || pooled - n_source >= labels.size())
          throw std::out_of_range("not a target index");
        return labels[pooled - n_source];
      };
      cover_clf.emplace(cover_based_classifier(data.sample(false), labeler, acfg));
      rec.queries_made = cover_clf->cover.queries().size();
    } else {
      const TransferSample s = data.sample(true);
      std::vector<Label> labels = s.source_labels;
      labels.insert(labels.end(), s.target_labels.begin(), s.target_labels.end());
      plain.emplace(s.pooled_points(), std::move(labels), acfg);
    }
    const LepskiClassifier& clf = cover_clf ? cover_clf->classifier : *plain;

    std::vector<std::size_t> final_ks;
    std::size_t query = 0;
    err = excess_error_mc(
        [&](std::span<const double> x) {
          LepskiTrace tr = clf.classify(x);
          final_ks.push_back(tr.final_k);
          const Label y = tr.final_label;
          if (query < cfg.max_traces) {
            TraceRow row;
            row.n_source = n_source;
            row.n_target = n_target;
            row.trial = trial;
            row.query = query;
            row.x.assign(x.begin(), x.end());
            row.bayes_label = family.bayes(x);
            row.trace = std::move(tr);
            result.traces.push_back(std::move(row));
          }
          ++query;
          return y;
        },
        family, cfg.m_eval, data.eval_seed);
    rec.k_used = median_of(std::move(final_ks));
  }
  rec.excess_error = err.estimate;
  rec.ci_half_width = err.ci_half_width;
  if (cfg.record_wall_time)
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  return result;
}

std::vector<TrialResult> run_jobs(const ExperimentConfig& cfg, const FamilyPtr& fixed_family) {
  struct Job {
    std::size_t n_source, n_target, trial;
  };
  std::vector<Job> jobs;
  for (const auto& [p, q] : cfg.sweep)
    for (std::size_t t = 0; t < cfg.trials; ++t) jobs.push_back({p, q, t});
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    return std::tie(a.n_source, a.n_target, a.trial) < std::tie(b.n_source, b.n_target, b.trial);
  });
  jobs.erase(std::unique(jobs.begin(), jobs.end(),
                         [](const Job& a, const Job& b) {
                           return a.n_source == b.n_source && a.n_target == b.n_target &&
                                  a.trial == b.trial;
                         }),
             jobs.end());

  std::vector<TrialResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        results[i] = run_trial_with(cfg, fixed_family, jobs[i].n_source, jobs[i].n_target,
                                    jobs[i].trial);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(jobs.size());
        return;
      }
    }
  };
  std::size_t workers = cfg.workers ? cfg.workers : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(jobs.size(), 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

FamilyPtr static_family(const ExperimentConfig& cfg) {
  return preset_is_static(cfg.family) ? make_preset_family(cfg.family, 1, 1, 0) : nullptr;
}

std::string join_coords(const std::vector<double>& x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ";" : "") + format_double(x[i]);
  return s;
}

}  // namespace

std::string KPolicy::name() const {
  switch (kind) {
    case KPolicyKind::oracle_optimal: return "oracle_optimal";
    case KPolicyKind::fixed: return "fixed(" + std::to_string(k) + ")";
    case KPolicyKind::adaptive_lepski: return "adaptive_lepski";
    case KPolicyKind::cover_adaptive: return "cover_adaptive";
  }
  return "unknown";
}

KPolicy parse_k_policy(const std::string& text) {
  KPolicy p;
  if (text == "oracle_optimal") return p;
  if (text == "adaptive_lepski") {
    p.kind = KPolicyKind::adaptive_lepski;
    return p;
  }
  if (text == "cover_adaptive") {
    p.kind = KPolicyKind::cover_adaptive;
    return p;
  }
  std::string digits;
  if (text.rfind("fixed(", 0) == 0 && text.size() > 7 && text.back() == ')')
    digits = text.substr(6, text.size() - 7);
  else if (text.rfind("fixed:", 0) == 0)
    digits = text.substr(6);
  if (!digits.empty() && std::all_of(digits.begin(), digits.end(), ::isdigit)) {
    p.kind = KPolicyKind::fixed;
    p.k = std::stoull(digits);
    if (p.k == 0) bad_field("k_policy", "fixed k must be >= 1");
    return p;
  }
  bad_field("k_policy", "unknown policy '" + text +
                            "'; expected oracle_optimal, fixed(k), adaptive_lepski or "
                            "cover_adaptive");
}

void ExperimentConfig::validate() const {
  if (family.id.empty()) bad_field("family", "missing preset id");
  if (trials == 0) bad_field("trials", "must be >= 1");
  if (m_eval < 100) bad_field("m_eval", "must be >= 100");
  if (!(delta > 0.0 && delta < 1.0)) bad_field("delta", "must be in (0,1)");
  if (v_b && *v_b == 0) bad_field("v_b", "must be >= 1");
  if (k_policy.kind == KPolicyKind::fixed && k_policy.k == 0) bad_field("k_policy", "k must be >= 1");
  for (const auto& [p, q] : sweep)
    if (p == 0 && q == 0) bad_field("sweep", "every point needs n_P or n_Q >= 1");
  if (gamma.probes == 0) bad_field("gamma.probes", "must be >= 1");
  if (gamma.n == 0) bad_field("gamma.n", "must be >= 1");
  if (gamma.min_count == 0) bad_field("gamma.min_count", "must be >= 1");
  for (std::size_t i = 0; i < gamma.radii.size(); ++i)
    if (!(gamma.radii[i] > 0.0 && gamma.radii[i] <= 1.0) ||
        (i > 0 && !(gamma.radii[i] > gamma.radii[i - 1])))
      bad_field("gamma.radii", "must be strictly increasing within (0, 1]");
}

void ExperimentConfig::require_sweep() const {
  if (sweep.empty()) bad_field("sweep", "needs at least one (n_P, n_Q) point");
}

AdaptiveConfig ExperimentConfig::adaptive(std::size_t dim) const {
  AdaptiveConfig a = AdaptiveConfig::for_dimension(dim, delta);
  if (v_b) a.v_b = *v_b;
  return a;
}

json ExperimentConfig::to_json() const {
  json j;
  j["family"] = {{"id", family.id}, {"params", family.params}};
  j["sweep"] = {{"points", sweep_to_json(sweep)}};
  j["trials"] = trials;
  j["k_policy"] = k_policy.name();
  j["m_eval"] = m_eval;
  j["seed"] = seed;
  j["delta"] = delta;
  j["v_b"] = v_b ? json(*v_b) : json(nullptr);
  j["record_wall_time"] = record_wall_time;
  j["gamma"] = {{"n", gamma.n},
                {"probes", gamma.probes},
                {"min_count", gamma.min_count},
                {"radii", gamma.radii}};
  return j;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {
      "family", "sweep",  "trials", "k_policy",         "m_eval",  "seed",       "delta",
      "v_b",    "output", "gamma",  "record_wall_time", "workers", "max_traces"};
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) throw ConfigError("unknown config field '" + key + "'");

  ExperimentConfig cfg;
  if (!doc.contains("family")) bad_field("family", "required");
  const json& fam = doc.at("family");
  if (fam.is_string()) {
    cfg.family.id = fam.get<std::string>();
  } else if (fam.is_object()) {
    for (const auto& [key, value] : fam.items())
      if (key != "id" && key != "params") bad_field("family", "unknown key '" + key + "'");
    if (!fam.contains("id") || !fam.at("id").is_string()) bad_field("family.id", "expected a string");
    cfg.family.id = fam.at("id").get<std::string>();
    if (fam.contains("params")) cfg.family.params = fam.at("params");
  } else {
    bad_field("family", "expected a preset id or {\"id\", \"params\"}");
  }
  if (std::find(kPresets.begin(), kPresets.end(), cfg.family.id) == kPresets.end())
    throw ConfigError("unknown family preset '" + cfg.family.id +
                      "'; available presets: " + preset_list());

  if (doc.contains("sweep")) {
    const json& sw = doc.at("sweep");
    if (!sw.is_object()) bad_field("sweep", "expected an object");
    for (const auto& [key, value] : sw.items())
      if (key != "n_P" && key != "n_Q" && key != "points")
        bad_field("sweep", "unknown key '" + key + "'");
    if (sw.contains("points")) {
      if (sw.contains("n_P") || sw.contains("n_Q"))
        bad_field("sweep", "give either points or n_P/n_Q lists, not both");
      if (!sw.at("points").is_array()) bad_field("sweep.points", "expected an array");
      for (const auto& pt : sw.at("points")) {
        if (!pt.is_array() || pt.size() != 2) bad_field("sweep.points", "expected [n_P, n_Q] pairs");
        cfg.sweep.emplace_back(as_count(pt[0], "sweep.points", true),
                               as_count(pt[1], "sweep.points", true));
      }
    } else {
      auto list = [&](const char* key) {
        std::vector<std::size_t> out;
        if (!sw.contains(key)) return std::vector<std::size_t>{0};
        const json& arr = sw.at(key);
        if (!arr.is_array() || arr.empty())
          bad_field(std::string("sweep.") + key, "expected a non-empty array");
        for (const auto& v : arr) out.push_back(as_count(v, std::string("sweep.") + key, true));
        return out;
      };
      if (!sw.contains("n_P") && !sw.contains("n_Q")) bad_field("sweep", "needs n_P or n_Q");
      for (std::size_t p : list("n_P"))
        for (std::size_t q : list("n_Q")) cfg.sweep.emplace_back(p, q);
    }
  }
  if (doc.contains("trials")) cfg.trials = as_count(doc.at("trials"), "trials");
  if (doc.contains("k_policy")) {
    const json& kp = doc.at("k_policy");
    if (kp.is_string()) {
      cfg.k_policy = parse_k_policy(kp.get<std::string>());
    } else if (kp.is_object()) {
      if (!kp.contains("kind") || !kp.at("kind").is_string())
        bad_field("k_policy.kind", "expected a string");
      const std::string kind = kp.at("kind").get<std::string>();
      if (kind == "fixed") {
        if (!kp.contains("k")) bad_field("k_policy.k", "required for the fixed policy");
        cfg.k_policy.kind = KPolicyKind::fixed;
        cfg.k_policy.k = as_count(kp.at("k"), "k_policy.k");
      } else {
        cfg.k_policy = parse_k_policy(kind);
      }
    } else {
      bad_field("k_policy", "expected a string or an object");
    }
  }
  if (doc.contains("m_eval")) cfg.m_eval = as_count(doc.at("m_eval"), "m_eval");
  if (doc.contains("seed")) cfg.seed = as_count(doc.at("seed"), "seed", true);
  if (doc.contains("delta")) cfg.delta = as_number(doc.at("delta"), "delta");
  if (doc.contains("v_b") && !doc.at("v_b").is_null()) cfg.v_b = as_count(doc.at("v_b"), "v_b");
  if (doc.contains("output")) {
    if (!doc.at("output").is_string()) bad_field("output", "expected a path string");
    cfg.output = doc.at("output").get<std::string>();
  }
  if (doc.contains("record_wall_time")) {
    if (!doc.at("record_wall_time").is_boolean()) bad_field("record_wall_time", "expected a boolean");
    cfg.record_wall_time = doc.at("record_wall_time").get<bool>();
  }
  if (doc.contains("workers")) cfg.workers = as_count(doc.at("workers"), "workers", true);
  if (doc.contains("max_traces")) cfg.max_traces = as_count(doc.at("max_traces"), "max_traces", true);
  if (doc.contains("gamma")) {
    const json& g = doc.at("gamma");
    if (!g.is_object()) bad_field("gamma", "expected an object");
    for (const auto& [key, value] : g.items()) {
      if (key == "n") cfg.gamma.n = as_count(value, "gamma.n");
      else if (key == "probes") cfg.gamma.probes = as_count(value, "gamma.probes");
      else if (key == "min_count") cfg.gamma.min_count = as_count(value, "gamma.min_count");
      else if (key == "radii") {
        if (!value.is_array()) bad_field("gamma.radii", "expected an array");
        for (const auto& r : value) cfg.gamma.radii.push_back(as_number(r, "gamma.radii"));
      } else {
        bad_field("gamma", "unknown key '" + key + "'");
      }
    }
  }
  cfg.validate();

  // Construct the family once per distinct shape so bad parameters surface
  // as configuration errors before any trial runs.
  if (preset_is_static(cfg.family) || cfg.sweep.empty()) {
    make_preset_family(cfg.family, 1, 1, 0);
  } else {
    for (const auto& [p, q] : cfg.sweep) make_preset_family(cfg.family, p, q, 0);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = cfg.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> available_presets() { return kPresets; }

FamilyPtr make_preset_family(const FamilySpec& spec, std::size_t n_source,
                             std::size_t n_target, std::uint64_t family_seed) {
  try {
    return build_preset(spec, n_source, n_target, family_seed);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("family '" + spec.id + "' at (n_P=" + std::to_string(n_source) +
                      ", n_Q=" + std::to_string(n_target) + "): " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("family '" + spec.id + "': " + e.what());
  }
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t n_source, std::size_t n_target,
                         std::size_t trial) {
  return derive_seed(base, {n_source, n_target, trial});
}

TransferSample TrialData::sample(bool target_labeled) const {
  const std::size_t dim = source.points.dim();
  if (target_labeled)
    return TransferSample(source.points, source.labels, target.points, target.labels,
                          PointSet(dim));
  return TransferSample(source.points, source.labels, PointSet(dim), {}, target.points);
}

TrialData draw_trial(const ExperimentConfig& cfg, std::size_t n_source, std::size_t n_target,
                     std::size_t trial) {
  return draw_trial_with(cfg, static_family(cfg), n_source, n_target, trial);
}

TrialResult run_trial(const ExperimentConfig& cfg, std::size_t n_source, std::size_t n_target,
                      std::size_t trial) {
  return run_trial_with(cfg, static_family(cfg), n_source, n_target, trial);
}

std::vector<TrialResult> run_sweep_detailed(const ExperimentConfig& cfg) {
  cfg.validate();
  cfg.require_sweep();
  return run_jobs(cfg, static_family(cfg));
}

std::vector<RateRecord> run_sweep(const ExperimentConfig& cfg) {
  std::vector<RateRecord> out;
  for (auto& r : run_sweep_detailed(cfg)) out.push_back(r.record);
  return out;
}

std::vector<std::string> sweep_comments(const ExperimentConfig& cfg) {
  return {"config_hash: " + config_hash(cfg),
          "family: " + cfg.family.id + " " + cfg.family.params.dump(),
          "seed: " + std::to_string(cfg.seed) + ", trials: " + std::to_string(cfg.trials) +
              ", m_eval: " + std::to_string(cfg.m_eval),
          "policy: " + cfg.k_policy.name()};
}

void write_cover_report(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  cfg.require_sweep();
  const FamilyPtr fixed = static_family(cfg);
  out << "# config_hash: " << config_hash(cfg) << '\n';
  out << "n_P,n_Q,trial,level,k,added,total_queries\n";
  for (const auto& [p, q] : cfg.sweep) {
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const TrialData data = draw_trial_with(cfg, fixed, p, q, t);
      const std::size_t v_b = cfg.adaptive(data.family->params().dim).v_b;
      const CoverIndex cover = build_cover(data.sample(false), cfg.delta, v_b);
      if (cover.levels().empty()) {
        out << "# n_P=" << p << " n_Q=" << q << " trial=" << t << ": no levels (n0=" << cover.k0()
            << ")\n";
        continue;
      }
      for (std::size_t l = 0; l < cover.levels().size(); ++l) {
        const auto& level = cover.levels()[l];
        out << p << ',' << q << ',' << t << ',' << l << ',' << level.k << ','
            << level.added.size() << ',' << cover.queries().size() << '\n';
      }
    }
  }
  if (!out) throw std::runtime_error("write failed while emitting the cover report");
}

void write_traces_csv(const std::vector<TrialResult>& results, std::ostream& out) {
  out << "n_P,n_Q,trial,query,x,steps,final_k,final_eta,final_label,bayes_label,stop_reason\n";
  for (const auto& r : results)
    for (const auto& row : r.traces)
      out << row.n_source << ',' << row.n_target << ',' << row.trial << ',' << row.query << ','
          << join_coords(row.x) << ',' << row.trace.steps.size() << ',' << row.trace.final_k
          << ',' << format_double(row.trace.final_eta) << ','
          << static_cast<int>(row.trace.final_label) << ',' << static_cast<int>(row.bayes_label)
          << ',' << to_string(row.trace.stop_reason) << '\n';
  if (!out) throw std::runtime_error("write failed while emitting traces");
}

std::vector<GammaRun> run_gamma(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> radii =
      cfg.gamma.radii.empty() ? default_gamma_radii() : cfg.gamma.radii;
  const std::size_t n = cfg.gamma.n;
  const FamilyPtr fixed = static_family(cfg);
  std::vector<GammaRun> runs;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const std::uint64_t ts = trial_seed(cfg.seed, n, n, t);
    const FamilyPtr family =
        fixed ? fixed : make_preset_family(cfg.family, n, n, derive_seed(ts, {4}));
    Rng src_rng(derive_seed(ts, {1}));
    Rng tgt_rng(derive_seed(ts, {2}));
    Rng probe_rng(derive_seed(ts, {5}));
    const PointSet source = family->sample_source_points(n, src_rng);
    const PointSet target = family->sample_target_points(n, tgt_rng);
    const PointSet probes = family->sample_target_points(cfg.gamma.probes, probe_rng);
    runs.push_back({t, estimate_gamma(source, target, probes, radii, cfg.gamma.min_count)});
  }
  return runs;
}

void write_gamma_report(const ExperimentConfig& cfg, const std::vector<GammaRun>& runs,
                        std::ostream& out) {
  out << "# config_hash: " << config_hash(cfg) << '\n';
  out << "# per-radius log ratio is the maximum over probes of log(Q^(B)/P^(B))\n";
  out << "trial,r,log_ratio,ratio,probes_used\n";
  std::vector<double> estimates;
  std::ostringstream summary;
  for (const auto& run : runs) {
    if (!run.result.estimate) {
      summary << "# trial " << run.trial << ": gamma likely infinite (disjoint support)\n";
      continue;
    }
    const GammaEstimate& e = *run.result.estimate;
    for (std::size_t i = 0; i < e.radii.size(); ++i)
      out << run.trial << ',' << format_double(e.radii[i]) << ',' << format_double(e.log_ratio[i])
          << ',' << format_double(std::exp(e.log_ratio[i])) << ',' << e.probes_used[i] << '\n';
    summary << "# trial " << run.trial << ": gamma_hat=" << format_double(e.gamma_hat)
            << " stderr=" << format_double(e.fit_stderr)
            << " intercept=" << format_double(e.intercept)
            << " fit_residual=" << format_double(e.fit_residual)
            << " pairs_used=" << e.n_points_used << '\n';
    estimates.push_back(e.gamma_hat);
  }
  out << summary.str();
  if (!estimates.empty()) {
    std::sort(estimates.begin(), estimates.end());
    const std::size_t m = estimates.size();
    const double median =
        m % 2 ? estimates[m / 2] : 0.5 * (estimates[m / 2 - 1] + estimates[m / 2]);
    out << "# median gamma_hat over " << m << " trials: " << format_double(median) << '\n';
  }
  if (!out) throw std::runtime_error("write failed while emitting the gamma report");
}

}  // namespace tlknn
