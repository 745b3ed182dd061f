#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kinex/coefficients.hpp"
#include "kinex/coupling.hpp"
#include "kinex/engine.hpp"

namespace kinex {

using Json = nlohmann::ordered_json;

enum class Scenario {
  moments,
  contraction,
  equilibration,
  chaos_scan,
  decoupling,
  rescaled,
  conjecture_probe,
};

std::string_view scenario_name(Scenario scenario);
Scenario parse_scenario(std::string_view name);

/// Model declaration as written in a configuration file:
/// { "family": "...", "params": {...} }.
struct ModelSpec {
  Family family = Family::random_sharing;
  TradeTuple tuple;                // deterministic
  double lambda = 0.0;             // saving_propensity
  std::vector<TableAtom> atoms;    // empirical_table, weights as given
  bool closed_form = true;

  CoefficientModel build() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ScenarioParams {
  std::vector<int> n_list;       // chaos_scan, decoupling
  int n_ref = 100000;            // chaos_scan, decoupling
  int k = 2;                     // decoupling
  PairedInit paired_init = PairedInit::shuffled;  // contraction
  bool track_nonlinear = false;  // chaos_scan
  double significance = 0.01;    // equilibration
  double rate_tolerance = 0.10;  // contraction

  friend bool operator==(const ScenarioParams&, const ScenarioParams&) = default;
};

struct OutputPaths {
  std::string csv;
  std::string summary;
  std::string replicas_csv;  // optional per-replica table (engine scenarios)

  friend bool operator==(const OutputPaths&, const OutputPaths&) = default;
};

struct ExperimentSpec {
  Scenario scenario = Scenario::moments;
  ModelSpec model;
  SimConfig sim;
  ScenarioParams params;
  OutputPaths output;
  int threads = 0;  // 0: KINEX_THREADS or hardware concurrency

  void validate() const;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

Json to_json(const ModelSpec& model);
ModelSpec model_spec_from_json(const Json& j);
Json to_json(const InitialCondition& initial);
InitialCondition initial_from_json(const Json& j, const std::string& base_dir = "");
Json to_json(const SimConfig& sim);
SimConfig sim_config_from_json(const Json& j, const std::string& base_dir = "");
Json to_json(const ExperimentSpec& spec);
/// Throws InvalidConfig on malformed or incomplete documents.
ExperimentSpec spec_from_json(const Json& j, const std::string& base_dir = "");
ExperimentSpec load_spec(const std::string& path);

Json to_json(const ModelDiagnostics& diag);

/// Whitespace/comma separated numbers; non-numeric tokens are skipped.
std::vector<double> read_values(const std::string& path);

/// 17 significant digits.
std::string format_real(double x);

/// E[(V_0^1)^2] and E[V_0^1 V_0^2] for N particles drawn from `initial`.
std::pair<double, double> initial_second_moments(const InitialCondition& initial, int n);

struct Check {
  std::string name;
  bool passed = false;
  // Counted by --strict; exploratory checks are reported only.
  bool strict = true;
  Json detail;
};

struct RunReport {
  std::string csv;
  std::string replicas_csv;
  Json summary;
  std::vector<Check> checks;

  bool strict_failure() const;
};

/// Runs the scenario in memory; output is a deterministic function of the spec.
RunReport run_experiment(const ExperimentSpec& spec);

/// Writes the CSV table(s) and JSON summary named in spec.output.
void write_artifacts(const ExperimentSpec& spec, const RunReport& report);

inline constexpr const char* engine_csv_header = "t,stat_name,p,mean,stderr,replicas";
inline constexpr const char* coupling_csv_header = "t,quantity,mean,stderr,N,N_ref,k";

}  // namespace kinex
