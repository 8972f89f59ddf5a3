#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tlknn/classifier.hpp"
#include "tlknn/harness.hpp"

using namespace tlknn;
using nlohmann::json;

namespace {

json base_config() {
  return json::parse(R"({
    "family": {"id": "margin_singularity", "params": {"gamma": 1}},
    "sweep": {"n_P": [200, 400], "n_Q": [0, 50]},
    "trials": 2,
    "k_policy": "oracle_optimal",
    "m_eval": 500,
    "seed": 17
  })");
}

std::string csv_of(const ExperimentConfig& cfg, const std::vector<RateRecord>& recs) {
  std::ostringstream out;
  write_records_csv(out, recs, sweep_comments(cfg));
  return out.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig cfg = parse_config(base_config());
  CHECK(cfg.sweep.size() == 4);
  CHECK(cfg.trials == 2);
  CHECK(cfg.seed == 17);
  CHECK(cfg.k_policy.kind == KPolicyKind::oracle_optimal);

  CHECK(parse_k_policy("fixed(7)").k == 7);
  CHECK(parse_k_policy("fixed:3").kind == KPolicyKind::fixed);
  CHECK(parse_k_policy("cover_adaptive").uses_cover());
  CHECK_THROWS_AS(parse_k_policy("fixed(0)"), ConfigError);
  CHECK_THROWS_AS(parse_k_policy("nearest"), ConfigError);

  auto bad = [](auto mutate) {
    json j = base_config();
    mutate(j);
    CHECK_THROWS_AS(parse_config(j), ConfigError);
  };
  bad([](json& j) { j["trials"] = 0; });
  bad([](json& j) { j["delta"] = 1.5; });
  bad([](json& j) { j["sweep"] = {{"points", {{0, 0}}}}; });
  bad([](json& j) { j["colour"] = "blue"; });
  bad([](json& j) { j["family"]["params"]["gamma"] = -1; });
  bad([](json& j) { j["family"]["params"]["wobble"] = 1; });
  bad([](json& j) { j["m_eval"] = 10; });

  json unknown = base_config();
  unknown["family"]["id"] = "spiral";
  try {
    parse_config(unknown);
    FAIL("unknown preset accepted");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const auto& p : available_presets()) CHECK(msg.find(p) != std::string::npos);
  }
}

TEST_CASE("config hash is stable and sensitive") {
  const ExperimentConfig a = parse_config(base_config());
  const ExperimentConfig b = parse_config(base_config());
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  json j = base_config();
  j["seed"] = 18;
  CHECK(config_hash(parse_config(j)) != config_hash(a));
}

TEST_CASE("single point fixed-k sweep yields one record") {
  json j = base_config();
  j["sweep"] = {{"points", {{100, 0}}}};
  j["trials"] = 1;
  j["k_policy"] = "fixed(1)";
  const auto recs = run_sweep(parse_config(j));
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].k_used == 1);
  CHECK(recs[0].queries_made == 0);
}

TEST_CASE("sweeps are deterministic and sorted") {
  ExperimentConfig cfg = parse_config(base_config());
  const auto a = run_sweep(cfg);
  cfg.workers = 3;
  const auto b = run_sweep(cfg);
  CHECK(csv_of(cfg, a) == csv_of(cfg, b));
  REQUIRE(a.size() == 8);
  for (std::size_t i = 1; i < a.size(); ++i)
    CHECK(std::tie(a[i - 1].n_source, a[i - 1].n_target, a[i - 1].trial) <
          std::tie(a[i].n_source, a[i].n_target, a[i].trial));
  for (const auto& r : a) {
    CHECK(r.k_used == optimal_k(r.n_source, r.n_target,
                                RateSpec(make_preset_family(cfg.family, 1, 1, 0)->params())));
    CHECK(r.queries_made == 0);
    CHECK(r.excess_error >= 0.0);
    CHECK(r.excess_error <= 1.0);
    CHECK(r.wall_time_ms == 0.0);
  }
}

TEST_CASE("trial records do not depend on the rest of the sweep") {
  json small = base_config();
  small["sweep"] = {{"points", {{400, 50}}}};
  small["trials"] = 1;
  const auto alone = run_sweep(parse_config(small));
  const auto full = run_sweep(parse_config(base_config()));
  bool found = false;
  for (const auto& r : full)
    if (r.n_source == 400 && r.n_target == 50 && r.trial == 0) {
      CHECK(r == alone.at(0));
      found = true;
    }
  CHECK(found);
}

TEST_CASE("cover policy records queries, others never do") {
  json j = base_config();
  j["family"] = {{"id", "disjoint_support"}};
  j["sweep"] = {{"points", {{1000, 100}}}};
  j["trials"] = 1;
  j["k_policy"] = "cover_adaptive";
  const auto cover = run_sweep(parse_config(j));
  CHECK(cover.at(0).queries_made > 0);
  CHECK(cover.at(0).queries_made <= 100);
  j["k_policy"] = "adaptive_lepski";
  CHECK(run_sweep(parse_config(j)).at(0).queries_made == 0);
}

TEST_CASE("lower-bound presets") {
  json j = base_config();
  j["family"] = json::parse(R"({"id": "lowerbound", "params": {"gamma": 0, "beta": 1, "c_w": 1}})");
  const auto recs = run_sweep(parse_config(j));
  CHECK(recs.size() == 8);
  j["family"] = json::parse(
      R"({"id": "lowerbound", "params": {"schedule": "fixed", "r": 0.1, "m": 5, "w": 0.01, "sigma_seed": 4}})");
  CHECK(run_sweep(parse_config(j)).size() == 8);
  j["family"]["params"].erase("w");
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("records csv round trip") {
  std::vector<RateRecord> recs = {{10, 0, 0, 3, 0, 0.1, 0.01, 0.0},
                                  {10, 5, 1, 4, 2, 1.0 / 3.0, 1e-17, 12.5}};
  std::stringstream ss;
  write_records_csv(ss, recs, {"note", "policy: fixed(3)"});
  const std::string text = ss.str();
  CHECK(text.find(kRecordHeader) != std::string::npos);
  CHECK(parse_records_csv(ss) == recs);

  std::istringstream missing("n_P,n_Q,trial,k_used\n1,2,3,4\n");
  try {
    read_records_csv(missing);
    FAIL("accepted a csv with missing columns");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("excess_error") != std::string::npos);
  }
}

TEST_CASE("plot script") {
  std::istringstream empty(std::string(kRecordHeader) + "\n");
  const std::string s0 = plot_script(read_records_csv(empty), "out.png", "t");
  CHECK(s0.find("SERIES = [\n]") != std::string::npos);

  std::stringstream two;
  write_records_csv(two, {{100, 0, 0, 1, 0, 0.1, 0.01, 0}}, {"policy: oracle_optimal"});
  write_records_csv(two, {{100, 0, 0, 8, 0, 0.2, 0.01, 0}}, {"policy: adaptive_lepski"});
  const std::string s2 = plot_script(read_records_csv(two), "out.png", "t");
  CHECK(s2.find("\"label\": \"oracle_optimal\"") != std::string::npos);
  CHECK(s2.find("\"label\": \"adaptive_lepski\"") != std::string::npos);

  const std::string path = "plot_test_records.csv";
  {
    std::ofstream f(path);
    f << "n_P,trial\n1,0\n";
  }
  CHECK_THROWS_AS(emit_plot_script(path, "plot_test.py"), std::runtime_error);
  std::remove(path.c_str());
}
