#include "kinex/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kinex/errors.hpp"
#include "kinex/parallel.hpp"
#include "kinex/stats.hpp"

namespace kinex {

std::string_view time_mode_name(TimeMode mode) {
  return mode == TimeMode::event_time ? "event_time" : "jump_count";
}

TimeMode parse_time_mode(std::string_view name) {
  if (name == "event_time") return TimeMode::event_time;
  if (name == "jump_count") return TimeMode::jump_count;
  throw InvalidConfig("unknown time_mode '" + std::string(name) + "'");
}

std::string_view initial_kind_name(InitialKind kind) {
  switch (kind) {
    case InitialKind::dirac_m: return "dirac_m";
    case InitialKind::exponential_m: return "exponential_m";
    case InitialKind::uniform_0_2m: return "uniform_0_2m";
    case InitialKind::two_point: return "two_point";
    case InitialKind::from_file: return "from_file";
  }
  return "unknown";
}

InitialKind parse_initial_kind(std::string_view name) {
  for (auto k : {InitialKind::dirac_m, InitialKind::exponential_m, InitialKind::uniform_0_2m,
                 InitialKind::two_point, InitialKind::from_file}) {
    if (initial_kind_name(k) == name) return k;
  }
  throw InvalidConfig("unknown initial condition '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Initial conditions and configuration

void InitialCondition::validate(int n) const {
  if (!(m > 0.0) || !std::isfinite(m)) throw InvalidConfig("initial mean m must be positive");
  switch (kind) {
    case InitialKind::two_point: {
      if (!(p_high >= 0.0 && p_high <= 1.0)) throw InvalidConfig("two_point: p_high not in [0,1]");
      if (atoms.empty()) break;
      if (atoms.size() != 2 || atoms[0] < 0.0 || atoms[1] < 0.0) {
        throw InvalidConfig("two_point: expected two nonnegative atoms");
      }
      const double mean = (1.0 - p_high) * atoms[0] + p_high * atoms[1];
      if (std::abs(mean - m) > 1e-12 * std::max(1.0, m)) {
        throw InvalidConfig("two_point: atoms do not average to m");
      }
      break;
    }
    case InitialKind::from_file: {
      if (static_cast<int>(values.size()) != n) {
        throw InvalidConfig("from_file: expected " + std::to_string(n) + " values, got " +
                            std::to_string(values.size()));
      }
      double sum = 0.0;
      for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidConfig("from_file: bad wealth value");
        sum += v;
      }
      if (std::abs(sum / n - m) > 1e-9 * m) throw InvalidConfig("from_file: mean differs from m");
      break;
    }
    default: break;
  }
}

Eigen::ArrayXd InitialCondition::draw(int n, RandomStream& rng) const {
  Eigen::ArrayXd v(n);
  switch (kind) {
    case InitialKind::dirac_m: v.setConstant(m); break;
    case InitialKind::exponential_m:
      for (int i = 0; i < n; ++i) v[i] = rng.exponential(1.0 / m);
      break;
    case InitialKind::uniform_0_2m:
      for (int i = 0; i < n; ++i) v[i] = 2.0 * m * rng.uniform();
      break;
    case InitialKind::two_point: {
      const double low = atoms.empty() ? 0.0 : atoms[0];
      const double high = atoms.empty() ? 2.0 * m : atoms[1];
      for (int i = 0; i < n; ++i) v[i] = rng.uniform() < p_high ? high : low;
      break;
    }
    case InitialKind::from_file:
      v = Eigen::Map<const Eigen::ArrayXd>(values.data(), n);
      for (int i = n - 1; i > 0; --i) {
        std::swap(v[i], v[static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
      }
      break;
  }
  return v;
}

double SimConfig::horizon() const {
  return time_mode == TimeMode::event_time ? t_end : static_cast<double>(n_jumps);
}

void SimConfig::validate() const {
  if (n_particles < 2) throw InvalidConfig("n_particles must be at least 2");
  if (replicas < 1) throw InvalidConfig("replicas must be at least 1");
  if (time_mode == TimeMode::event_time) {
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidConfig("t_end must be finite, >= 0");
    if (n_jumps != 0) throw InvalidConfig("n_jumps is only valid in jump_count mode");
  } else {
    if (n_jumps < 0) throw InvalidConfig("n_jumps must be >= 0");
    if (t_end != 0.0) throw InvalidConfig("t_end is only valid in event_time mode");
  }
  for (std::size_t k = 0; k < record_grid.size(); ++k) {
    const double g = record_grid[k];
    if (!(g >= 0.0 && g <= horizon())) throw InvalidConfig("record_grid point outside horizon");
    if (k > 0 && !(g > record_grid[k - 1])) throw InvalidConfig("record_grid must be increasing");
    if (time_mode == TimeMode::jump_count && g != std::floor(g)) {
      throw InvalidConfig("record_grid must hold jump indices in jump_count mode");
    }
  }
  for (double p : moments_p) {
    if (!(p > 0.0) || !std::isfinite(p)) throw InvalidConfig("moments_p entries must be positive");
  }
  initial.validate(n_particles);
}

// ---------------------------------------------------------------------------
// Dynamics

double ParticleState::mean() const { return total() / static_cast<double>(wealth.size()); }

double ParticleState::total() const { return compensated_sum(wealth); }

std::pair<int, int> draw_pair(int n, RandomStream& rng) {
  const auto k = rng.below(static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1));
  const int first = static_cast<int>(k / (n - 1));
  int second = static_cast<int>(k % (n - 1));
  if (second >= first) ++second;
  return {first, second};
}

Event draw_event(int n, const CoefficientModel& model, RandomStream& rng) {
  Event e;
  e.wait = rng.exponential(0.5 * n);
  std::tie(e.first, e.second) = draw_pair(n, rng);
  e.tuple = model.sample(rng);
  return e;
}

void apply_trade(Eigen::Ref<Eigen::ArrayXd> wealth, int i, int j, const TradeTuple& tuple) {
  const double vi = wealth[i];
  const double vj = wealth[j];
  wealth[i] = tuple.l * vi + tuple.r * vj;
  wealth[j] = tuple.lt * vj + tuple.rt * vi;
}

ParticleState init_state(const SimConfig& config, int replica) {
  if (replica < 0 || replica >= config.replicas) {
    throw InvalidConfig("replica index out of range");
  }
  config.initial.validate(config.n_particles);
  ParticleState s;
  s.rng = RandomStream::child(config.seed, static_cast<std::uint64_t>(replica));
  s.wealth = config.initial.draw(config.n_particles, s.rng);
  return s;
}

Event step(ParticleState& state, const CoefficientModel& model, TimeMode mode) {
  const Event e = draw_event(static_cast<int>(state.wealth.size()), model, state.rng);
  if (mode == TimeMode::event_time) state.t += e.wait;
  apply_trade(state.wealth, e.first, e.second, e.tuple);
  ++state.jumps;
  return e;
}

Eigen::ArrayXd rescaled_view(const ParticleState& state) {
  const double m = state.mean();
  if (!(m > 0.0)) throw ZeroMean("rescaled view undefined: empirical mean is zero");
  return state.wealth / m;
}

// ---------------------------------------------------------------------------
// Observables

std::string_view stat_name(Stat stat) {
  switch (stat) {
    case Stat::mean: return "mean";
    case Stat::total: return "total";
    case Stat::min: return "min";
    case Stat::max: return "max";
    case Stat::moment: return "moment";
    case Stat::mean_power: return "mean_power";
    case Stat::particle1_power: return "particle1_power";
    case Stat::rescaled_moment: return "rescaled_moment";
  }
  return "unknown";
}

std::vector<StatKey> observable_layout(const SimConfig& config) {
  std::vector<StatKey> layout = {{Stat::mean, 0.0}, {Stat::total, 0.0}, {Stat::min, 0.0},
                                 {Stat::max, 0.0}};
  for (double p : config.moments_p) {
    layout.push_back({Stat::moment, p});
    layout.push_back({Stat::mean_power, p});
    layout.push_back({Stat::particle1_power, p});
    if (config.record_rescaled) layout.push_back({Stat::rescaled_moment, p});
  }
  return layout;
}

Eigen::ArrayXd observe(const Eigen::Ref<const Eigen::ArrayXd>& wealth,
                       const std::vector<StatKey>& layout) {
  const auto n = static_cast<double>(wealth.size());
  const double total = compensated_sum(wealth);
  const double mean = total / n;
  Eigen::ArrayXd out(layout.size());
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const auto [stat, p] = layout[c];
    switch (stat) {
      case Stat::mean: out[c] = mean; break;
      case Stat::total: out[c] = total; break;
      case Stat::min: out[c] = wealth.minCoeff(); break;
      case Stat::max: out[c] = wealth.maxCoeff(); break;
      case Stat::moment: out[c] = compensated_sum(wealth.pow(p)) / n; break;
      case Stat::mean_power: out[c] = std::pow(mean, p); break;
      case Stat::particle1_power: out[c] = std::pow(wealth[0], p); break;
      case Stat::rescaled_moment:
        out[c] = mean > 0.0 ? compensated_sum((wealth / mean).pow(p)) / n
                            : std::numeric_limits<double>::quiet_NaN();
        break;
    }
  }
  return out;
}

const StatSeries& ObservableSeries::get(Stat stat, double p) const {
  for (const auto& s : stats) {
    if (s.key.stat == stat && s.key.p == p) return s;
  }
  throw InvalidConfig("statistic '" + std::string(stat_name(stat)) + "' (p=" + std::to_string(p) +
                      ") was not recorded");
}

ReplicaTrajectory simulate_replica(const SimConfig& config, const CoefficientModel& model,
                                   int replica) {
  const auto layout = observable_layout(config);
  const auto& grid = config.record_grid;
  const int n = config.n_particles;
  ReplicaTrajectory run;
  run.final_state = init_state(config, replica);
  ParticleState& s = run.final_state;
  run.values.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(layout.size()));
  std::size_t k = 0;
  auto record_until = [&](auto&& before) {
    while (k < grid.size() && before(grid[k])) {
      run.values.row(static_cast<Eigen::Index>(k)) = observe(s.wealth, layout).matrix().transpose();
      ++k;
    }
  };

  if (config.time_mode == TimeMode::event_time) {
    while (true) {
      const Event e = draw_event(n, model, s.rng);
      const double next = s.t + e.wait;
      record_until([next](double g) { return g < next; });
      if (next > config.t_end) break;
      apply_trade(s.wealth, e.first, e.second, e.tuple);
      s.t = next;
      ++s.jumps;
    }
  } else {
    while (true) {
      record_until([&s](double g) { return g <= static_cast<double>(s.jumps); });
      if (s.jumps >= config.n_jumps) break;
      step(s, model, TimeMode::jump_count);
    }
  }
  return run;
}

std::vector<ReplicaTrajectory> simulate_replicas(const SimConfig& config,
                                                 const CoefficientModel& model, int threads) {
  config.validate();
  std::vector<ReplicaTrajectory> runs(static_cast<std::size_t>(config.replicas));
  parallel_for(config.replicas, threads,
               [&](int r) { runs[static_cast<std::size_t>(r)] = simulate_replica(config, model, r); });
  return runs;
}

ObservableSeries aggregate(const SimConfig& config, const std::vector<ReplicaTrajectory>& runs) {
  const auto layout = observable_layout(config);
  const auto points = static_cast<Eigen::Index>(config.record_grid.size());
  ObservableSeries out;
  out.grid = config.record_grid;
  Eigen::ArrayXd column(static_cast<Eigen::Index>(runs.size()));
  for (std::size_t c = 0; c < layout.size(); ++c) {
    StatSeries series;
    series.key = layout[c];
    series.replicas = static_cast<int>(runs.size());
    series.mean.resize(points);
    series.stderr.resize(points);
    for (Eigen::Index g = 0; g < points; ++g) {
      for (std::size_t r = 0; r < runs.size(); ++r) {
        column[static_cast<Eigen::Index>(r)] = runs[r].values(g, static_cast<Eigen::Index>(c));
      }
      const auto ms = mean_stderr(column);
      series.mean[g] = ms.mean;
      series.stderr[g] = ms.stderr;
    }
    out.stats.push_back(std::move(series));
  }
  return out;
}

ObservableSeries simulate(const SimConfig& config, const CoefficientModel& model, int threads) {
  return aggregate(config, simulate_replicas(config, model, threads));
}

}  // namespace kinex
