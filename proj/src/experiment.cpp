#include "kinex/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kinex/analytics.hpp"
#include "kinex/errors.hpp"
#include "kinex/parallel.hpp"
#include "kinex/stats.hpp"
#include "kinex/transport.hpp"

#ifndef KINEX_VERSION
#define KINEX_VERSION "unknown"
#endif

namespace kinex {

namespace {

template <typename T>
T field(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T required(const Json& j, const char* key) {
  if (!j.contains(key)) throw InvalidConfig(std::string("missing required field '") + key + "'");
  return field<T>(j, key, T{});
}

const Json& object(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_object()) {
    throw InvalidConfig(std::string("missing object '") + key + "'");
  }
  return j.at(key);
}

Json real(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

std::string_view scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::moments: return "moments";
    case Scenario::contraction: return "contraction";
    case Scenario::equilibration: return "equilibration";
    case Scenario::chaos_scan: return "chaos_scan";
    case Scenario::decoupling: return "decoupling";
    case Scenario::rescaled: return "rescaled";
    case Scenario::conjecture_probe: return "conjecture_probe";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  for (auto s : {Scenario::moments, Scenario::contraction, Scenario::equilibration,
                 Scenario::chaos_scan, Scenario::decoupling, Scenario::rescaled,
                 Scenario::conjecture_probe}) {
    if (scenario_name(s) == name) return s;
  }
  throw InvalidConfig("unknown scenario '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Models

CoefficientModel ModelSpec::build() const {
  auto model = [&] {
    switch (family) {
      case Family::deterministic: return CoefficientModel::deterministic(tuple);
      case Family::winner_takes_all: return CoefficientModel::winner_takes_all();
      case Family::iid_uniform: return CoefficientModel::iid_uniform();
      case Family::complement_uniform: return CoefficientModel::complement_uniform();
      case Family::random_sharing: return CoefficientModel::random_sharing();
      case Family::saving_propensity: return CoefficientModel::saving_propensity(lambda);
      case Family::empirical_table: return CoefficientModel::empirical_table(atoms);
    }
    throw InvalidModel("unknown family");
  }();
  return closed_form ? model : model.with_closed_form(false);
}

namespace {

Json tuple_json(const TradeTuple& t) { return Json{{"l", t.l}, {"r", t.r}, {"lt", t.lt}, {"rt", t.rt}}; }

TradeTuple tuple_from(const Json& j) {
  if (!j.is_object()) throw InvalidConfig("trade tuple must be an object with l, r, lt, rt");
  return {required<double>(j, "l"), required<double>(j, "r"), required<double>(j, "lt"),
          required<double>(j, "rt")};
}

}  // namespace

Json to_json(const ModelSpec& model) {
  Json params = Json::object();
  switch (model.family) {
    case Family::deterministic: params = tuple_json(model.tuple); break;
    case Family::saving_propensity: params["lambda"] = model.lambda; break;
    case Family::empirical_table: {
      Json atoms = Json::array();
      for (const auto& a : model.atoms) {
        Json atom = tuple_json(a.tuple);
        atom["weight"] = a.weight;
        atoms.push_back(atom);
      }
      params["atoms"] = atoms;
      break;
    }
    default: break;
  }
  Json j{{"family", family_name(model.family)}, {"params", params}};
  if (!model.closed_form) j["closed_form"] = false;
  return j;
}

ModelSpec model_spec_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidConfig("model must be an object");
  ModelSpec m;
  m.family = parse_family(required<std::string>(j, "family"));
  const Json params = j.contains("params") ? j.at("params") : Json::object();
  switch (m.family) {
    case Family::deterministic: m.tuple = tuple_from(params); break;
    case Family::saving_propensity: m.lambda = required<double>(params, "lambda"); break;
    case Family::empirical_table: {
      if (!params.contains("atoms") || !params.at("atoms").is_array()) {
        throw InvalidConfig("empirical_table needs params.atoms");
      }
      for (const auto& a : params.at("atoms")) {
        m.atoms.push_back({tuple_from(a), field<double>(a, "weight", 1.0)});
      }
      break;
    }
    default: break;
  }
  m.closed_form = field<bool>(j, "closed_form", true);
  return m;
}

// ---------------------------------------------------------------------------
// Simulation settings

std::vector<double> read_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<double> out;
  std::string token;
  char ch;
  auto flush = [&] {
    if (token.empty()) return;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end && *end == '\0') out.push_back(v);
    token.clear();
  };
  while (in.get(ch)) {
    if (ch == ',' || ch == ';' || std::isspace(static_cast<unsigned char>(ch))) {
      flush();
    } else {
      token.push_back(ch);
    }
  }
  flush();
  return out;
}

Json to_json(const InitialCondition& initial) {
  Json j{{"kind", initial_kind_name(initial.kind)}, {"m", initial.m}};
  if (initial.kind == InitialKind::two_point) {
    if (!initial.atoms.empty()) j["atoms"] = initial.atoms;
    j["p_high"] = initial.p_high;
  }
  if (initial.kind == InitialKind::from_file) {
    if (!initial.path.empty()) {
      j["path"] = initial.path;
    } else {
      j["values"] = initial.values;
    }
  }
  return j;
}

InitialCondition initial_from_json(const Json& j, const std::string& base_dir) {
  if (!j.is_object()) throw InvalidConfig("initial must be an object");
  InitialCondition ic;
  ic.kind = parse_initial_kind(required<std::string>(j, "kind"));
  if (ic.kind == InitialKind::from_file) {
    ic.path = field<std::string>(j, "path", "");
    if (!ic.path.empty()) {
      std::filesystem::path p(ic.path);
      if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
      ic.values = read_values(p.string());
    } else {
      ic.values = field<std::vector<double>>(j, "values", {});
    }
    if (ic.values.empty()) throw InvalidConfig("from_file initial condition has no values");
    double sum = 0.0;
    for (double v : ic.values) sum += v;
    ic.m = field<double>(j, "m", sum / static_cast<double>(ic.values.size()));
  } else {
    ic.m = field<double>(j, "m", 1.0);
  }
  if (ic.kind == InitialKind::two_point) {
    ic.atoms = field<std::vector<double>>(j, "atoms", {});
    ic.p_high = field<double>(j, "p_high", 0.5);
  }
  return ic;
}

Json to_json(const SimConfig& sim) {
  Json j{{"n_particles", sim.n_particles}, {"time_mode", time_mode_name(sim.time_mode)}};
  if (sim.time_mode == TimeMode::event_time) {
    j["t_end"] = sim.t_end;
  } else {
    j["n_jumps"] = sim.n_jumps;
  }
  j["initial"] = to_json(sim.initial);
  j["seed"] = sim.seed;
  j["replicas"] = sim.replicas;
  j["record_grid"] = sim.record_grid;
  j["moments_p"] = sim.moments_p;
  j["record_rescaled"] = sim.record_rescaled;
  return j;
}

SimConfig sim_config_from_json(const Json& j, const std::string& base_dir) {
  if (!j.is_object()) throw InvalidConfig("sim must be an object");
  SimConfig sim;
  sim.n_particles = required<int>(j, "n_particles");
  sim.time_mode = parse_time_mode(field<std::string>(j, "time_mode", "event_time"));
  sim.t_end = field<double>(j, "t_end", 0.0);
  sim.n_jumps = field<std::int64_t>(j, "n_jumps", 0);
  if (!j.contains("seed") || !j.at("seed").is_number_integer()) {
    throw InvalidConfig("sim.seed must be given explicitly as an integer");
  }
  sim.seed = j.at("seed").get<std::uint64_t>();
  sim.replicas = field<int>(j, "replicas", 1);
  sim.initial = j.contains("initial") ? initial_from_json(j.at("initial"), base_dir) : InitialCondition{};
  if (j.contains("record_grid") && j.at("record_grid").is_object()) {
    const auto& g = j.at("record_grid");
    const double start = field<double>(g, "start", 0.0);
    const double stop = required<double>(g, "stop");
    const int count = required<int>(g, "count");
    if (count < 1) throw InvalidConfig("record_grid.count must be positive");
    for (int k = 0; k < count; ++k) {
      sim.record_grid.push_back(count == 1 ? start : start + (stop - start) * k / (count - 1));
    }
  } else {
    sim.record_grid = field<std::vector<double>>(j, "record_grid", {});
  }
  sim.moments_p = field<std::vector<double>>(j, "moments_p", {});
  sim.record_rescaled = field<bool>(j, "record_rescaled", false);
  return sim;
}

// ---------------------------------------------------------------------------
// Experiment documents

Json to_json(const ExperimentSpec& spec) {
  const auto& p = spec.params;
  Json params{{"n_list", p.n_list},
              {"n_ref", p.n_ref},
              {"k", p.k},
              {"paired_init", paired_init_name(p.paired_init)},
              {"track_nonlinear", p.track_nonlinear},
              {"significance", p.significance},
              {"rate_tolerance", p.rate_tolerance}};
  Json output{{"csv", spec.output.csv}, {"summary", spec.output.summary}};
  if (!spec.output.replicas_csv.empty()) output["replicas_csv"] = spec.output.replicas_csv;
  return Json{{"scenario", scenario_name(spec.scenario)},
              {"model", to_json(spec.model)},
              {"sim", to_json(spec.sim)},
              {"params", params},
              {"output", output},
              {"threads", spec.threads}};
}

ExperimentSpec spec_from_json(const Json& j, const std::string& base_dir) {
  try {
    if (!j.is_object()) throw InvalidConfig("experiment spec must be a JSON object");
    ExperimentSpec spec;
    spec.scenario = parse_scenario(required<std::string>(j, "scenario"));
    spec.model = model_spec_from_json(object(j, "model"));
    spec.sim = sim_config_from_json(object(j, "sim"), base_dir);
    const Json params = j.contains("params") ? j.at("params") : Json::object();
    auto& p = spec.params;
    p.n_list = field<std::vector<int>>(params, "n_list", {});
    p.n_ref = field<int>(params, "n_ref", p.n_ref);
    p.k = field<int>(params, "k", p.k);
    p.paired_init = parse_paired_init(field<std::string>(params, "paired_init", "shuffled"));
    p.track_nonlinear = field<bool>(params, "track_nonlinear", false);
    p.significance = field<double>(params, "significance", p.significance);
    p.rate_tolerance = field<double>(params, "rate_tolerance", p.rate_tolerance);
    const Json output = j.contains("output") ? j.at("output") : Json::object();
    spec.output.csv = field<std::string>(output, "csv", "");
    spec.output.summary = field<std::string>(output, "summary", "");
    spec.output.replicas_csv = field<std::string>(output, "replicas_csv", "");
    spec.threads = field<int>(j, "threads", 0);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(e.what());
  }
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig("'" + path + "': " + e.what());
  }
  return spec_from_json(j, std::filesystem::path(path).parent_path().string());
}

void ExperimentSpec::validate() const {
  model.build();
  if (threads < 0) throw InvalidConfig("threads must be >= 0");
  const bool coupled = scenario == Scenario::contraction || scenario == Scenario::chaos_scan ||
                       scenario == Scenario::decoupling;
  if (coupled && sim.time_mode != TimeMode::event_time) {
    throw InvalidConfig(std::string(scenario_name(scenario)) + " runs in event_time mode");
  }
  switch (scenario) {
    case Scenario::chaos_scan:
    case Scenario::decoupling: {
      if (scenario == Scenario::chaos_scan && params.n_list.empty()) {
        throw InvalidConfig("chaos_scan needs params.n_list");
      }
      std::vector<int> ns = params.n_list.empty() ? std::vector<int>{sim.n_particles} : params.n_list;
      for (std::size_t i = 0; i < ns.size(); ++i) {
        if (ns[i] < 2) throw InvalidConfig("n_list entries must be >= 2");
        if (i > 0 && ns[i] <= ns[i - 1]) throw InvalidConfig("n_list must be increasing");
        SimConfig s = sim;
        s.n_particles = ns[i];
        s.validate();
        if (scenario == Scenario::decoupling && (params.k < 2 || params.k > ns[i])) {
          throw InvalidConfig("decoupling needs 2 <= k <= N");
        }
      }
      if (params.n_ref < 2) throw InvalidConfig("n_ref must be >= 2");
      break;
    }
    case Scenario::equilibration:
      if (!(params.significance > 0.0 && params.significance < 1.0)) {
        throw InvalidConfig("significance must lie in (0, 1)");
      }
      sim.validate();
      break;
    case Scenario::contraction:
      if (!(params.rate_tolerance > 0.0)) throw InvalidConfig("rate_tolerance must be positive");
      sim.validate();
      break;
    default: sim.validate(); break;
  }
}

Json to_json(const ModelDiagnostics& diag) {
  const auto& f = diag.flags;
  Json pareto{{"value", real(diag.pareto.infinite ? INFINITY : diag.pareto.value)},
              {"infinite", diag.pareto.infinite},
              {"degenerate", diag.pareto.degenerate}};
  return Json{{"n", diag.n},
              {"p", diag.p},
              {"alpha", pareto},
              {"a", real(diag.a)},
              {"b", real(diag.b)},
              {"c", real(diag.c)},
              {"d", real(diag.d)},
              {"a_tilde", real(diag.a_tilde)},
              {"a_p", real(diag.a_p)},
              {"b_p", real(diag.b_p)},
              {"beta", real(diag.beta)},
              {"gamma", real(diag.gamma)},
              {"lambda1", real(diag.lambda1)},
              {"lambda2", real(diag.lambda2)},
              {"flags",
               {{"strict_conservation", f.strict_conservation},
                {"pairwise_conservation", f.pairwise_conservation},
                {"weak_conservation", f.weak_conservation},
                {"mean_conservation", f.mean_conservation},
                {"nondegenerate", f.nondegenerate}}},
              {"stderr", real(diag.stderr)}};
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::pair<double, double> initial_second_moments(const InitialCondition& initial, int n) {
  const double m = initial.m;
  switch (initial.kind) {
    case InitialKind::dirac_m: return {m * m, m * m};
    case InitialKind::exponential_m: return {2.0 * m * m, m * m};
    case InitialKind::uniform_0_2m: return {4.0 * m * m / 3.0, m * m};
    case InitialKind::two_point: {
      const double lo = initial.atoms.empty() ? 0.0 : initial.atoms[0];
      const double hi = initial.atoms.empty() ? 2.0 * m : initial.atoms[1];
      const double p = initial.p_high;
      const double mean = (1.0 - p) * lo + p * hi;
      return {(1.0 - p) * lo * lo + p * hi * hi, mean * mean};
    }
    case InitialKind::from_file: {
      double s1 = 0.0, s2 = 0.0;
      for (double v : initial.values) {
        s1 += v;
        s2 += v * v;
      }
      return {s2 / n, (s1 * s1 - s2) / (static_cast<double>(n) * (n - 1))};
    }
  }
  return {0.0, 0.0};
}

bool RunReport::strict_failure() const {
  return std::any_of(checks.begin(), checks.end(), [](const Check& c) { return c.strict && !c.passed; });
}

// ---------------------------------------------------------------------------
// Scenarios

namespace {

class CsvWriter {
 public:
  explicit CsvWriter(const char* header) { out_ << header << '\n'; }
  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double x) { return format_real(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(std::string_view x) { return std::string(x); }
  static std::string cell(const char* x) { return x; }
  static std::string cell(const std::string& x) { return x; }
  std::ostringstream out_;
};

bool has_p(Stat stat) {
  return stat == Stat::moment || stat == Stat::mean_power || stat == Stat::particle1_power ||
         stat == Stat::rescaled_moment;
}

std::string p_cell(const StatKey& key) { return has_p(key.stat) ? format_real(key.p) : ""; }

void add_check(RunReport& report, std::string name, bool passed, Json detail, bool strict = true) {
  report.checks.push_back({std::move(name), passed, strict, std::move(detail)});
}

struct Context {
  const ExperimentSpec& spec;
  CoefficientModel model;
  int threads;
  RunReport report;
  Json results = Json::object();
};

void write_series(CsvWriter& csv, const ObservableSeries& series) {
  for (std::size_t g = 0; g < series.grid.size(); ++g) {
    for (const auto& s : series.stats) {
      const auto k = static_cast<Eigen::Index>(g);
      csv.row(series.grid[g], stat_name(s.key.stat), p_cell(s.key), s.mean[k], s.stderr[k], s.replicas);
    }
  }
}

std::string replicas_table(const SimConfig& sim, const std::vector<ReplicaTrajectory>& runs) {
  const auto layout = observable_layout(sim);
  CsvWriter csv("replica,grid_index,t,stat_name,p,value");
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (std::size_t g = 0; g < sim.record_grid.size(); ++g) {
      for (std::size_t c = 0; c < layout.size(); ++c) {
        csv.row(r, g, sim.record_grid[g], stat_name(layout[c].stat), p_cell(layout[c]),
                runs[r].values(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(c)));
      }
    }
  }
  return csv.str();
}

// Replica averages of M_0^p and of (1/N) sum_i (V_0^i)^p.
std::pair<double, double> initial_power_means(const SimConfig& sim, double p) {
  double em = 0.0, ev = 0.0;
  for (int r = 0; r < sim.replicas; ++r) {
    const ParticleState s = init_state(sim, r);
    em += std::pow(s.mean(), p);
    ev += compensated_sum(s.wealth.pow(p)) / static_cast<double>(s.wealth.size());
  }
  return {em / sim.replicas, ev / sim.replicas};
}

Json series_json(const std::vector<double>& grid, const Eigen::ArrayXd& mean, const Eigen::ArrayXd& se) {
  Json j = Json::array();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto k = static_cast<Eigen::Index>(g);
    j.push_back({{"t", grid[g]}, {"mean", real(mean[k])}, {"stderr", real(se[k])}});
  }
  return j;
}

// Envelope, martingale, second-moment ODE and moment-bound checks shared by
// the moment-type scenarios.
void moment_checks(Context& ctx, const ObservableSeries& series, CsvWriter& csv, bool exploratory) {
  const auto& sim = ctx.spec.sim;
  const int n = sim.n_particles;
  const auto& grid = series.grid;
  const double m = sim.initial.m;

  {
    const auto& mean = series.get(Stat::mean);
    bool ok = true;
    double worst = 0.0;
    for (Eigen::Index g = 0; g < mean.mean.size(); ++g) {
      const double tol = std::max(4.0 * mean.stderr[g], 1e-12 * m);
      worst = std::max(worst, std::abs(mean.mean[g] - m) / std::max(mean.stderr[g], 1e-300));
      ok = ok && std::abs(mean.mean[g] - m) <= tol;
    }
    add_check(ctx.report, "mean_conserved_in_expectation", ok, {{"m", m}, {"tolerance", "4 SE"}},
              !exploratory);
  }

  Json per_p = Json::array();
  for (double p : sim.moments_p) {
    const auto diag = diagnostics(ctx.model, n, p);
    const auto [em0p, ev0p] = initial_power_means(sim, p);
    const auto& mp = series.get(Stat::mean_power, p);
    bool ok = true;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto k = static_cast<Eigen::Index>(g);
      const double env = theorem1_envelope(diag, n, p, em0p, grid[g]);
      csv.row(grid[g], "envelope", format_real(p), env, 0.0, 0);
      const double slack = 1e-12 * std::abs(env);
      if (p > 1.0) ok = ok && mp.mean[k] >= env - 3.0 * mp.stderr[k] - slack;
      if (p < 1.0) ok = ok && mp.mean[k] <= env + 3.0 * mp.stderr[k] + slack;
      if (p == 1.0) ok = ok && std::abs(mp.mean[k] - env) <= 4.0 * mp.stderr[k] + slack;
    }
    add_check(ctx.report, "envelope_respected_p" + format_real(p), ok,
              {{"p", p}, {"gamma", real(diag.gamma)}, {"beta", real(diag.beta)}, {"EM0p", em0p},
               {"tolerance", p == 1.0 ? "4 SE" : "3 SE"}},
              !exploratory);
    Json entry{{"p", p}, {"gamma", real(diag.gamma)}, {"beta", real(diag.beta)},
               {"a_p", real(diag.a_p)}, {"b_p", real(diag.b_p)}};

    if (diag.flags.strict_conservation && diag.a_p > 1e-12) {
      const double bound = moment_propagation_bound(diag, p, m, ev0p);
      const auto& p1 = series.get(Stat::particle1_power, p);
      bool within = true;
      for (Eigen::Index g = 0; g < p1.mean.size(); ++g) {
        within = within && p1.mean[g] <= bound + 3.0 * p1.stderr[g];
      }
      entry["moment_bound"] = bound;
      add_check(ctx.report, "moment_bound_p" + format_real(p), within,
                {{"p", p}, {"bound", bound}, {"g0", ev0p}, {"tolerance", "3 SE"}});
    }

    const auto& mom = series.get(Stat::moment, p);
    if (grid.size() >= 2) {
      Eigen::Map<const Eigen::ArrayXd> t(grid.data(), static_cast<Eigen::Index>(grid.size()));
      entry["moment_trend_slope"] = real(least_squares(t, mom.mean).slope);
      entry["moment_first"] = real(mom.mean[0]);
      entry["moment_last"] = real(mom.mean[mom.mean.size() - 1]);
    }
    per_p.push_back(entry);

    if (p == 2.0) {
      const auto [g0, h0] = initial_second_moments(sim.initial, n);
      const auto pred = second_moment_solution(diag, n, g0, h0);
      const auto& p1 = series.get(Stat::particle1_power, 2.0);
      bool match = true;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto k = static_cast<Eigen::Index>(g);
        const double gp = pred.g(grid[g]);
        csv.row(grid[g], "ode_g", "2", gp, 0.0, 0);
        match = match && std::abs(p1.mean[k] - gp) <= std::max(3.0 * p1.stderr[k], 0.05 * std::abs(gp));
      }
      add_check(ctx.report, "second_moment_ode", match,
                {{"g0", g0}, {"h0", h0}, {"lambda1", pred.lambda1}, {"lambda2", pred.lambda2},
                 {"tolerance", "max(3 SE, 5% relative)"}},
                !exploratory);
      ctx.results["second_moment"] = {{"g0", g0},
                                      {"h0", h0},
                                      {"lambda1", pred.lambda1},
                                      {"lambda2", pred.lambda2},
                                      {"bounded", pred.lambda1 <= 1e-12}};
    }
  }
  ctx.results["moments"] = per_p;
}

void run_moment_like(Context& ctx) {
  SimConfig sim = ctx.spec.sim;
  const Scenario scenario = ctx.spec.scenario;
  if (scenario == Scenario::rescaled) sim.record_rescaled = true;
  const auto runs = simulate_replicas(sim, ctx.model, ctx.threads);
  const auto series = aggregate(sim, runs);
  CsvWriter csv(engine_csv_header);
  write_series(csv, series);

  if (scenario == Scenario::moments) moment_checks(ctx, series, csv, false);
  if (scenario == Scenario::conjecture_probe) {
    moment_checks(ctx, series, csv, true);
    ctx.results["label"] =
        "exploration of an open conjecture: moment trajectories are reported, not asserted";
    const auto flags = check_conditions(ctx.model);
    ctx.results["conditions"] = {{"strict_conservation", flags.strict_conservation},
                                 {"pairwise_conservation", flags.pairwise_conservation},
                                 {"weak_conservation", flags.weak_conservation}};
    for (double p : sim.moments_p) {
      if (p != 2.0 || flags.strict_conservation || flags.pairwise_conservation) continue;
      const auto& mom = series.get(Stat::moment, 2.0);
      if (mom.mean.size() >= 2) {
        add_check(ctx.report, "second_moment_increasing",
                  mom.mean[mom.mean.size() - 1] > mom.mean[0],
                  {{"first", mom.mean[0]}, {"last", mom.mean[mom.mean.size() - 1]}}, false);
      }
    }
  }
  if (scenario == Scenario::rescaled) {
    double worst = 0.0;
    for (const auto& run : runs) {
      if (run.final_state.mean() > 0.0) {
        worst = std::max(worst, std::abs(rescaled_view(run.final_state).mean() - 1.0));
      }
    }
    add_check(ctx.report, "rescaled_mean_one", worst <= 1e-12, {{"max_deviation", worst}});
    Json finals = Json::array();
    for (double p : sim.moments_p) {
      const auto& s = series.get(Stat::rescaled_moment, p);
      if (s.mean.size()) {
        finals.push_back({{"p", p}, {"mean", real(s.mean[s.mean.size() - 1])},
                          {"stderr", real(s.stderr[s.stderr.size() - 1])}});
      }
    }
    ctx.results["final_rescaled_moments"] = finals;
  }
  if (scenario == Scenario::equilibration) {
    const int n = sim.n_particles;
    Eigen::ArrayXd occupancy = Eigen::ArrayXd::Zero(n);
    bool vertices = true;
    int bad = 0;
    for (const auto& run : runs) {
      const auto& w = run.final_state.wealth;
      const double total = run.final_state.total();
      Eigen::Index top = 0;
      w.maxCoeff(&top);
      const double tol = 1e-9 * std::max(1.0, total);
      bool vertex = std::abs(w[top] - total) <= tol;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (i != top && std::abs(w[i]) > tol) vertex = false;
      }
      if (vertex) {
        occupancy[top] += 1.0;
      } else {
        ++bad;
      }
      vertices = vertices && vertex;
    }
    const double horizon = sim.horizon();
    for (int i = 0; i < n; ++i) {
      const double frac = occupancy[i] / sim.replicas;
      const double se = std::sqrt(frac * (1.0 - frac) / sim.replicas);
      csv.row(horizon, "occupancy", std::to_string(i), frac, se, sim.replicas);
    }
    const double stat = uniformity_chi_square(occupancy);
    const double pvalue = chi_square_sf(stat, n - 1);
    const auto flags = check_conditions(ctx.model);
    const bool applies = flags.strict_conservation && !flags.nondegenerate;
    ctx.results["equilibrium"] = {{"vertex_replicas", sim.replicas - bad},
                                  {"chi_square", stat},
                                  {"p_value", pvalue},
                                  {"significance", ctx.spec.params.significance}};
    if (applies) {
      add_check(ctx.report, "terminal_states_are_vertices", vertices, {{"non_vertex_replicas", bad}});
      add_check(ctx.report, "vertex_occupancy_uniform", pvalue > ctx.spec.params.significance,
                {{"chi_square", stat}, {"dof", n - 1}, {"p_value", pvalue}});
    }
  }
  ctx.report.csv = csv.str();
  if (!ctx.spec.output.replicas_csv.empty()) ctx.report.replicas_csv = replicas_table(sim, runs);
}

void run_contraction(Context& ctx) {
  const auto& sim = ctx.spec.sim;
  const auto res = contraction_experiment(sim, ctx.model, ctx.spec.params.paired_init, ctx.threads);
  CsvWriter csv(coupling_csv_header);
  for (std::size_t g = 0; g < res.grid.size(); ++g) {
    const auto k = static_cast<Eigen::Index>(g);
    csv.row(res.grid[g], "D", res.d_mean[k], res.d_stderr[k], sim.n_particles, 0, 0);
  }
  ctx.report.csv = csv.str();
  const double rel = res.predicted_rate > 0.0
                         ? std::abs(res.fitted_rate - res.predicted_rate) / res.predicted_rate
                         : std::abs(res.fitted_rate);
  ctx.results["contraction"] = {{"paired_init", paired_init_name(ctx.spec.params.paired_init)},
                                {"predicted_rate", res.predicted_rate},
                                {"fitted_rate", real(res.fitted_rate)},
                                {"relative_error", real(rel)},
                                {"fit_horizon", res.fit_horizon},
                                {"fit_points", res.fit_points},
                                {"D", series_json(res.grid, res.d_mean, res.d_stderr)},
                                {"D1", series_json(res.grid, res.d1_mean, res.d1_stderr)}};
  const bool all_zero = (res.d_mean == 0.0).all();
  if (all_zero) {
    add_check(ctx.report, "identical_systems_stay_identical", true, Json::object());
  } else if (res.predicted_rate > 0.0) {
    add_check(ctx.report, "contraction_rate", rel <= ctx.spec.params.rate_tolerance,
              {{"predicted", res.predicted_rate}, {"fitted", real(res.fitted_rate)},
               {"tolerance", ctx.spec.params.rate_tolerance}});
  }
}

void run_chaos(Context& ctx) {
  ChaosScanConfig cfg;
  cfg.sim = ctx.spec.sim;
  cfg.n_list = ctx.spec.params.n_list;
  cfg.n_ref = ctx.spec.params.n_ref;
  cfg.track_nonlinear = ctx.spec.params.track_nonlinear;
  const auto res = chaos_scan(cfg, ctx.model, ctx.threads);
  CsvWriter csv(coupling_csv_header);
  Json per_n = Json::array();
  bool decreasing = true;
  for (std::size_t s = 0; s < res.series.size(); ++s) {
    const auto& series = res.series[s];
    auto emit = [&](const char* name, const Eigen::ArrayXd& mean, const Eigen::ArrayXd& se) {
      for (std::size_t g = 0; g < res.grid.size(); ++g) {
        const auto k = static_cast<Eigen::Index>(g);
        csv.row(res.grid[g], name, mean[k], se[k], series.n, res.n_ref, 0);
      }
    };
    emit("W2sq", series.w2_mean, series.w2_stderr);
    if (cfg.track_nonlinear) {
      emit("g", series.g_mean, series.g_stderr);
      emit("h", series.h_mean, series.h_stderr);
    }
    per_n.push_back({{"N", series.n}, {"sup_W2sq", series.sup_w2}});
    if (s > 0) decreasing = decreasing && series.sup_w2 < res.series[s - 1].sup_w2;
  }
  ctx.report.csv = csv.str();
  ctx.results["chaos"] = {{"n_ref", res.n_ref}, {"per_N", per_n}, {"loglog_slope", real(res.loglog_slope)}};
  if (res.series.size() >= 2) {
    add_check(ctx.report, "sup_w2_decreasing_in_N", decreasing, {{"per_N", per_n}});
    add_check(ctx.report, "loglog_slope_at_most_-0.3", res.loglog_slope <= -0.3,
              {{"slope", real(res.loglog_slope)}, {"reference_exponent", -1.0 / 3.0}});
  }
}

void run_decoupling(Context& ctx) {
  const auto& params = ctx.spec.params;
  const std::vector<int> ns = params.n_list.empty() ? std::vector<int>{ctx.spec.sim.n_particles} : params.n_list;
  CsvWriter csv(coupling_csv_header);
  Json per_n = Json::array();
  std::vector<double> log_n, log_sup;
  bool independent = true;
  double worst_z = 0.0;
  bool starts_at_zero = true;
  for (int n : ns) {
    DecouplingConfig cfg;
    cfg.sim = ctx.spec.sim;
    cfg.sim.n_particles = n;
    cfg.n_ref = params.n_ref;
    cfg.k = params.k;
    const auto res = decoupling_experiment(cfg, ctx.model, ctx.threads);
    for (std::size_t g = 0; g < res.grid.size(); ++g) {
      const auto k = static_cast<Eigen::Index>(g);
      csv.row(res.grid[g], "g", res.g_mean[k], res.g_stderr[k], n, params.n_ref, params.k);
      if (res.grid[g] == 0.0) starts_at_zero = starts_at_zero && res.g_mean[k] == 0.0;
    }
    per_n.push_back({{"N", n},
                     {"sup_g", res.sup_g},
                     {"ztilde_correlation", real(res.ztilde_correlation)},
                     {"correlation_stderr", res.ztilde_correlation_stderr}});
    worst_z = std::max(worst_z, std::abs(res.ztilde_correlation) / res.ztilde_correlation_stderr);
    independent = independent &&
                  std::abs(res.ztilde_correlation) <= 4.0 * res.ztilde_correlation_stderr;
    if (res.sup_g > 0.0) {
      log_n.push_back(std::log(static_cast<double>(n)));
      log_sup.push_back(std::log(res.sup_g));
    }
  }
  ctx.report.csv = csv.str();
  Json summary{{"k", params.k}, {"n_ref", params.n_ref}, {"per_N", per_n}};
  add_check(ctx.report, "decoupled_copies_uncorrelated", independent,
            {{"largest_abs_correlation_in_se", real(worst_z)}, {"tolerance_se", 4.0}});
  add_check(ctx.report, "discrepancy_starts_at_zero", starts_at_zero, Json::object());
  if (log_n.size() >= 3) {
    const double slope =
        least_squares(Eigen::Map<Eigen::ArrayXd>(log_n.data(), static_cast<Eigen::Index>(log_n.size())),
                      Eigen::Map<Eigen::ArrayXd>(log_sup.data(), static_cast<Eigen::Index>(log_sup.size())))
            .slope;
    summary["loglog_slope"] = slope;
    add_check(ctx.report, "discrepancy_scales_like_1_over_N", slope > -1.3 && slope < -0.7,
              {{"slope", slope}, {"interval", {-1.3, -0.7}}});
  }
  ctx.results["decoupling"] = summary;
}

}  // namespace

RunReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  Context ctx{spec, spec.model.build(), spec.threads > 0 ? spec.threads : thread_count(), {}};
  switch (spec.scenario) {
    case Scenario::moments:
    case Scenario::equilibration:
    case Scenario::rescaled:
    case Scenario::conjecture_probe: run_moment_like(ctx); break;
    case Scenario::contraction: run_contraction(ctx); break;
    case Scenario::chaos_scan: run_chaos(ctx); break;
    case Scenario::decoupling: run_decoupling(ctx); break;
  }

  const double diag_p = spec.sim.moments_p.empty() ? 2.0 : spec.sim.moments_p.front();
  Json checks = Json::array();
  for (const auto& c : ctx.report.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"strict", c.strict}, {"detail", c.detail}});
  }
  ctx.report.summary = Json{
      {"scenario", scenario_name(spec.scenario)},
      {"checks", checks},
      {"all_strict_checks_passed", !ctx.report.strict_failure()},
      {"results", ctx.results},
      {"provenance",
       {{"version", KINEX_VERSION},
        {"seed", spec.sim.seed},
        {"replicas", spec.sim.replicas},
        {"model", to_json(spec.model)},
        {"diagnostics", to_json(diagnostics(ctx.model, spec.sim.n_particles, diag_p))},
        {"streams", "replica r draws from child(seed, r, lane); lane 0 drives the particle system"},
        {"rows", "aggregated rows are replica means over r = 0..replicas-1 in replica order, one row per "
                 "grid index and statistic"},
        {"spec", to_json(spec)}}}};
  return std::move(ctx.report);
}

void write_artifacts(const ExperimentSpec& spec, const RunReport& report) {
  auto write = [](const std::string& path, const std::string& text) {
    if (path.empty()) return;
    const auto parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
  };
  write(spec.output.csv, report.csv);
  write(spec.output.replicas_csv, report.replicas_csv);
  write(spec.output.summary, report.summary.dump(2) + "\n");
}

}  // namespace kinex
