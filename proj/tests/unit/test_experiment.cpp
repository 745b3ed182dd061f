#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "kinex/errors.hpp"
#include "kinex/experiment.hpp"

using namespace kinex;

namespace {

ExperimentSpec small_spec(Scenario scenario) {
  ExperimentSpec s;
  s.scenario = scenario;
  s.model.family = Family::random_sharing;
  s.sim.n_particles = 10;
  s.sim.t_end = 2.0;
  s.sim.seed = 99;
  s.sim.replicas = 40;
  s.sim.record_grid = {0.0, 1.0, 2.0};
  s.sim.moments_p = {2.0};
  s.threads = 1;
  return s;
}

const Check* find_check(const RunReport& r, const std::string& name) {
  for (const auto& c : r.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("spec json round trip") {
  auto s = small_spec(Scenario::contraction);
  s.model.family = Family::empirical_table;
  s.model.atoms = {{{0.5, 0.5, 0.5, 0.5}, 2.0}, {{1, 0, 1, 0}, 1.0}};
  s.sim.initial.kind = InitialKind::two_point;
  s.sim.initial.atoms = {0.5, 1.5};
  s.params.paired_init = PairedInit::flattened;
  s.params.n_list = {10, 20};
  s.output.csv = "out.csv";
  s.output.summary = "out.json";
  const auto back = spec_from_json(to_json(s));
  CHECK(back == s);
  CHECK(to_json(back).dump() == to_json(s).dump());

  auto d = small_spec(Scenario::moments);
  d.model.family = Family::saving_propensity;
  d.model.lambda = 0.25;
  d.sim.time_mode = TimeMode::jump_count;
  d.sim.t_end = 0.0;
  d.sim.n_jumps = 100;
  d.sim.record_grid = {0, 50, 100};
  CHECK(spec_from_json(to_json(d)) == d);
}

TEST_CASE("spec parsing rejects bad documents") {
  const Json good = to_json(small_spec(Scenario::moments));
  CHECK_NOTHROW(spec_from_json(good));

  Json j = good;
  j["sim"].erase("seed");
  CHECK_THROWS_AS(spec_from_json(j), InvalidConfig);
  j = good;
  j["sim"]["seed"] = 1.5;
  CHECK_THROWS_AS(spec_from_json(j), InvalidConfig);
  j = good;
  j["scenario"] = "nonsense";
  CHECK_THROWS_AS(spec_from_json(j), InvalidConfig);
  j = good;
  j["model"]["family"] = "nonsense";
  CHECK_THROWS_AS(spec_from_json(j), Error);
  j = good;
  j["sim"]["n_particles"] = "ten";
  CHECK_THROWS_AS(spec_from_json(j), InvalidConfig);

  j = good;
  j["sim"]["record_grid"] = Json{{"start", 0.0}, {"stop", 2.0}, {"count", 5}};
  const auto s = spec_from_json(j);
  REQUIRE(s.sim.record_grid.size() == 5);
  CHECK(s.sim.record_grid[1] == 0.5);
  CHECK(s.sim.record_grid[4] == 2.0);
}

TEST_CASE("validation") {
  auto s = small_spec(Scenario::moments);
  CHECK_NOTHROW(s.validate());
  s.sim.n_particles = 1;
  CHECK_THROWS_AS(s.validate(), InvalidConfig);
  s = small_spec(Scenario::moments);
  s.sim.record_grid = {0.0, 3.0};
  CHECK_THROWS_AS(s.validate(), InvalidConfig);
  s = small_spec(Scenario::moments);
  s.sim.n_jumps = 10;
  CHECK_THROWS_AS(s.validate(), InvalidConfig);
  s = small_spec(Scenario::moments);
  s.model.family = Family::saving_propensity;
  s.model.lambda = 1.5;
  CHECK_THROWS(s.validate());
}

TEST_CASE("from_file initial values relative to the spec") {
  const auto dir = std::filesystem::temp_directory_path() / "kinex_spec_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "w.txt") << "1.0, 2.0\n3.0 x 4.0\n";
  }
  Json j = to_json(small_spec(Scenario::moments));
  j["sim"]["n_particles"] = 4;
  j["sim"]["initial"] = Json{{"kind", "from_file"}, {"path", "w.txt"}};
  {
    std::ofstream(dir / "spec.json") << j.dump(2);
  }
  const auto s = load_spec((dir / "spec.json").string());
  CHECK(s.sim.initial.values == std::vector<double>{1, 2, 3, 4});
  CHECK_THROWS_AS(read_values((dir / "missing.txt").string()), IoError);
  CHECK_THROWS_AS(load_spec((dir / "missing.json").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("format_real keeps 17 digits") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(2.0) == "2");
}

TEST_CASE("moments scenario is deterministic") {
  const auto s = small_spec(Scenario::moments);
  const auto a = run_experiment(s);
  const auto b = run_experiment(s);
  CHECK(a.csv == b.csv);
  CHECK(a.summary.dump() == b.summary.dump());
  CHECK(a.csv.rfind(engine_csv_header, 0) == 0);
  CHECK(find_check(a, "mean_conserved_in_expectation") != nullptr);
  CHECK(find_check(a, "second_moment_ode") != nullptr);
  CHECK(a.summary.at("provenance").at("seed") == 99);

  auto threaded = s;
  threaded.threads = 3;
  CHECK(run_experiment(threaded).csv == a.csv);
}

TEST_CASE("each scenario runs on a small spec") {
  auto rescaled = small_spec(Scenario::rescaled);
  rescaled.sim.record_rescaled = true;
  CHECK_FALSE(run_experiment(rescaled).strict_failure());

  auto eq = small_spec(Scenario::equilibration);
  eq.model.family = Family::winner_takes_all;
  eq.sim.n_particles = 4;
  eq.sim.t_end = 60.0;
  eq.sim.record_grid = {0.0, 60.0};
  eq.sim.replicas = 400;
  const auto er = run_experiment(eq);
  REQUIRE(find_check(er, "terminal_states_are_vertices") != nullptr);
  CHECK(find_check(er, "terminal_states_are_vertices")->passed);

  auto con = small_spec(Scenario::contraction);
  con.sim.initial.kind = InitialKind::exponential_m;
  const auto same = run_experiment(small_spec(Scenario::contraction));
  CHECK(find_check(same, "identical_systems_stay_identical") != nullptr);
  const auto cr = run_experiment(con);
  CHECK(cr.csv.rfind(coupling_csv_header, 0) == 0);
  CHECK(find_check(cr, "contraction_rate") != nullptr);

  auto chaos = small_spec(Scenario::chaos_scan);
  chaos.sim.record_grid = {1.0, 2.0};
  chaos.sim.replicas = 5;
  chaos.params.n_list = {10, 40};
  chaos.params.n_ref = 2000;
  const auto ch = run_experiment(chaos);
  CHECK(ch.csv.find("W2sq") != std::string::npos);

  auto dec = small_spec(Scenario::decoupling);
  dec.params.n_list = {10, 20, 40};
  dec.params.n_ref = 500;
  dec.sim.replicas = 20;
  const auto dr = run_experiment(dec);
  CHECK(find_check(dr, "discrepancy_starts_at_zero")->passed);

  auto probe = small_spec(Scenario::conjecture_probe);
  probe.model.family = Family::iid_uniform;
  const auto pr = run_experiment(probe);
  for (const auto& c : pr.checks) CHECK_FALSE(c.strict);
}

TEST_CASE("artifacts are written") {
  const auto dir = std::filesystem::temp_directory_path() / "kinex_artifacts";
  std::filesystem::create_directories(dir);
  auto s = small_spec(Scenario::moments);
  s.output.csv = (dir / "m.csv").string();
  s.output.summary = (dir / "m.json").string();
  s.output.replicas_csv = (dir / "r.csv").string();
  const auto r = run_experiment(s);
  write_artifacts(s, r);
  std::ifstream in(s.output.csv);
  std::string first;
  std::getline(in, first);
  CHECK(first == engine_csv_header);
  CHECK(std::filesystem::file_size(s.output.summary) > 0);
  CHECK(std::filesystem::file_size(s.output.replicas_csv) > 0);
  std::filesystem::remove_all(dir);
}
