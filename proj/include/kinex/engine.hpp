#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kinex/coefficients.hpp"
#include "kinex/random.hpp"

namespace kinex {

enum class TimeMode { event_time, jump_count };

std::string_view time_mode_name(TimeMode mode);
TimeMode parse_time_mode(std::string_view name);

enum class InitialKind { dirac_m, exponential_m, uniform_0_2m, two_point, from_file };

std::string_view initial_kind_name(InitialKind kind);
InitialKind parse_initial_kind(std::string_view name);

/// Law of the exchangeable initial wealth vector.
struct InitialCondition {
  InitialKind kind = InitialKind::dirac_m;
  double m = 1.0;
  // two_point: the two atoms (default {0, 2m}) and the probability of the
  // upper one. The atoms must average to m.
  std::vector<double> atoms;
  double p_high = 0.5;
  // from_file: the base vector, randomly permuted for every replica.
  std::vector<double> values;
  std::string path;

  void validate(int n) const;
  /// N i.i.d. draws (or a shuffled copy of the base vector).
  Eigen::ArrayXd draw(int n, RandomStream& rng) const;

  friend bool operator==(const InitialCondition&, const InitialCondition&) = default;
};

struct SimConfig {
  int n_particles = 2;
  TimeMode time_mode = TimeMode::event_time;
  double t_end = 0.0;
  std::int64_t n_jumps = 0;
  InitialCondition initial;
  std::uint64_t seed = 0;
  int replicas = 1;
  // Observation times (event_time) or jump indices (jump_count), ascending.
  std::vector<double> record_grid;
  std::vector<double> moments_p;
  bool record_rescaled = false;

  void validate() const;
  double horizon() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct ParticleState {
  Eigen::ArrayXd wealth;
  double t = 0.0;
  std::int64_t jumps = 0;
  RandomStream rng;

  double mean() const;
  double total() const;
};

/// One atom of the driving Poisson measure: waiting time, ordered pair
/// (first takes (l, r), second takes (lt, rt)) and trade tuple.
struct Event {
  double wait = 0.0;
  int first = 0;
  int second = 1;
  TradeTuple tuple;
};

/// Uniform ordered pair of distinct indices out of N (N(N-1) outcomes).
std::pair<int, int> draw_pair(int n, RandomStream& rng);

/// Draws in the fixed order (waiting time ~ Exp(N/2), pair, tuple).
Event draw_event(int n, const CoefficientModel& model, RandomStream& rng);

/// v_i <- l v_i + r v_j and v_j <- lt v_j + rt v_i, both from pre-trade values.
void apply_trade(Eigen::Ref<Eigen::ArrayXd> wealth, int i, int j, const TradeTuple& tuple);

ParticleState init_state(const SimConfig& config, int replica);

/// Advances the state by one jump; the clock moves only in event_time mode.
Event step(ParticleState& state, const CoefficientModel& model,
           TimeMode mode = TimeMode::event_time);

/// V / M_t. Throws ZeroMean when all wealth has vanished.
Eigen::ArrayXd rescaled_view(const ParticleState& state);

// ---------------------------------------------------------------------------
// Observables

enum class Stat { mean, total, min, max, moment, mean_power, particle1_power, rescaled_moment };

std::string_view stat_name(Stat stat);

struct StatKey {
  Stat stat = Stat::mean;
  double p = 0.0;  // unused for mean/total/min/max

  friend bool operator==(const StatKey&, const StatKey&) = default;
};

/// Columns recorded for a configuration, in output order.
std::vector<StatKey> observable_layout(const SimConfig& config);

/// Values of every layout column for one wealth vector.
Eigen::ArrayXd observe(const Eigen::Ref<const Eigen::ArrayXd>& wealth,
                       const std::vector<StatKey>& layout);

struct ReplicaTrajectory {
  // grid points x layout columns
  Eigen::MatrixXd values;
  ParticleState final_state;
};

struct StatSeries {
  StatKey key;
  Eigen::ArrayXd mean;
  Eigen::ArrayXd stderr;
  int replicas = 0;
};

struct ObservableSeries {
  std::vector<double> grid;
  std::vector<StatSeries> stats;

  const StatSeries& get(Stat stat, double p = 0.0) const;
};

ReplicaTrajectory simulate_replica(const SimConfig& config, const CoefficientModel& model,
                                   int replica);

std::vector<ReplicaTrajectory> simulate_replicas(const SimConfig& config,
                                                 const CoefficientModel& model, int threads);

/// Replica-order reduction: identical output for any thread count.
ObservableSeries aggregate(const SimConfig& config, const std::vector<ReplicaTrajectory>& runs);

ObservableSeries simulate(const SimConfig& config, const CoefficientModel& model, int threads = 1);

}  // namespace kinex
