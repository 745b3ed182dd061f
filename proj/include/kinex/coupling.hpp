#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "kinex/coefficients.hpp"
#include "kinex/engine.hpp"
#include "kinex/random.hpp"
#include "kinex/transport.hpp"

namespace kinex {

// Noise lanes inside one replica stream family child(seed, replica, lane).
namespace lane {
inline constexpr std::uint64_t events = 0;
inline constexpr std::uint64_t partner_draws = 1;
inline constexpr std::uint64_t pool = 2;
inline constexpr std::uint64_t copy_events = 3;
inline constexpr std::uint64_t paired_init = 4;
inline constexpr std::uint64_t scan_base = 16;
}  // namespace lane

// ---------------------------------------------------------------------------
// Same-noise coupled pairs

struct CoupledState {
  Eigen::ArrayXd v;
  Eigen::ArrayXd u;
  double t = 0.0;
  std::int64_t jumps = 0;
  RandomStream rng;

  /// (1/N) sum_i (v_i - u_i)^2.
  double mean_square_gap() const;
};

/// Throws UnequalTotals when the totals differ by more than 1e-9 relative.
CoupledState make_coupled(Eigen::ArrayXd v, Eigen::ArrayXd u, RandomStream rng);

/// One shared event: the same pair and tuple act on both systems.
Event coupled_step(CoupledState& cs, const CoefficientModel& model);

enum class PairedInit {
  identical,   // U = V
  shuffled,    // U a random permutation of V
  flattened,   // U = M_0 (1, ..., 1)
  resampled,   // fresh draw from the initial law, rescaled to V's total
};

std::string_view paired_init_name(PairedInit kind);
PairedInit parse_paired_init(std::string_view name);

/// Replica `replica` of a coupled experiment: V as in the engine, U from the
/// paired-init lane.
CoupledState init_coupled(const SimConfig& config, int replica, PairedInit kind);

struct ContractionResult {
  std::vector<double> grid;
  // replica means of (1/N) sum_i (V^i - U^i)^2 and of (V^1 - U^1)^2
  Eigen::ArrayXd d_mean, d_stderr;
  Eigen::ArrayXd d1_mean, d1_stderr;
  int replicas = 0;
  double predicted_rate = 0.0;
  double fitted_rate = 0.0;
  // grid points used by the fit: 0 <= t <= fit_horizon and D > 0
  double fit_horizon = 0.0;
  int fit_points = 0;
};

/// Fits -slope of log D over grid points with t <= horizon.
double fit_decay_rate(const std::vector<double>& grid, const Eigen::ArrayXd& d, double horizon,
                      int* points_used = nullptr);

ContractionResult contraction_experiment(const SimConfig& config, const CoefficientModel& model,
                                         PairedInit kind, int threads);

// ---------------------------------------------------------------------------
// Reference pool: an auxiliary particle system standing in for f_t

class ReferencePool {
 public:
  ReferencePool(Eigen::ArrayXd values, RandomStream rng, bool indexed);
  ReferencePool(const ReferencePool&) = delete;
  ReferencePool& operator=(const ReferencePool&) = delete;
  ReferencePool(ReferencePool&&) noexcept;
  ReferencePool& operator=(ReferencePool&&) noexcept;
  ~ReferencePool();

  /// Applies every pool event with time <= t.
  void advance_to(double t, const CoefficientModel& model);

  Eigen::Index size() const { return values_.size(); }
  double time() const { return t_; }
  const Eigen::ArrayXd& values() const { return values_; }
  double mean() const;
  /// Pool quantile at level u in [0, 1); needs an indexed pool.
  double quantile(double u) const;
  EmpiricalMeasured measure() const { return EmpiricalMeasured(values_); }

 private:
  struct Index;
  void draw_next(const CoefficientModel& model);

  Eigen::ArrayXd values_;
  RandomStream rng_;
  double t_ = 0.0;
  double next_time_ = 0.0;
  Event next_;
  bool primed_ = false;
  std::unique_ptr<Index> index_;
};

// ---------------------------------------------------------------------------
// Nonlinear processes driven by the particle system's noise

/// Comonotone level of partner j as seen from particle i: (rank of z_j among
/// {z_k : k != i}, ties by index, + frac) / (N - 1). Linear-time reference
/// implementation.
double comonotone_level(const Eigen::Ref<const Eigen::ArrayXd>& z, int i, int j, double frac);

/// F^i: the reference atom paired with z_j by the comonotone map from the
/// empirical measure of {z_k : k != i}.
double nonlinear_partner(const Eigen::Ref<const Eigen::ArrayXd>& z, int i, int j, double frac,
                         const EmpiricalMeasured& reference);

struct NonlinearConfig {
  SimConfig sim;
  int n_ref = 100000;
};

class NonlinearEnsemble {
 public:
  /// V as in the engine for the same seed and replica, Z_0 = V_0, pool of
  /// size n_ref drawn from the initial law on its own lane.
  NonlinearEnsemble(const NonlinearConfig& config, int replica);
  NonlinearEnsemble(NonlinearEnsemble&&) noexcept;
  NonlinearEnsemble& operator=(NonlinearEnsemble&&) noexcept;
  ~NonlinearEnsemble();

  int n() const { return static_cast<int>(v_.size()); }
  double time() const { return t_; }
  std::int64_t jumps() const { return jumps_; }
  const Eigen::ArrayXd& v() const { return v_; }
  const Eigen::ArrayXd& z() const { return z_; }
  const Eigen::Array<std::int64_t, Eigen::Dynamic, 1>& v_jumps() const { return v_jumps_; }
  const Eigen::Array<std::int64_t, Eigen::Dynamic, 1>& z_jumps() const { return z_jumps_; }
  const ReferencePool& pool() const { return pool_; }

  /// Draws the next shared event, advances the pool to its time and updates
  /// V and Z; returns the event and the two partner values F.
  Event step(const CoefficientModel& model, double* f_first = nullptr,
             double* f_second = nullptr);
  /// Draws and applies events up to time t (the crossing event is kept
  /// pending, so the path does not depend on the observation times).
  void advance_to(double t, const CoefficientModel& model);

  /// F^i for partner j at the current state.
  double partner(int i, int j, double frac) const;

 private:
  struct Ranks;
  void set_z(int i, double value);

  Eigen::ArrayXd v_;
  Eigen::ArrayXd z_;
  Eigen::Array<std::int64_t, Eigen::Dynamic, 1> v_jumps_;
  Eigen::Array<std::int64_t, Eigen::Dynamic, 1> z_jumps_;
  ReferencePool pool_;
  RandomStream rng_;
  RandomStream partner_rng_;
  double t_ = 0.0;
  std::int64_t jumps_ = 0;
  bool pending_ = false;
  Event next_;
  std::unique_ptr<Ranks> ranks_;
};

/// Convenience for tests: one step on an ensemble.
inline Event nonlinear_step(NonlinearEnsemble& ens, const CoefficientModel& model) {
  return ens.step(model);
}

// ---------------------------------------------------------------------------
// Decoupled copies of the first k nonlinear processes

struct DecouplingConfig {
  SimConfig sim;
  int n_ref = 10000;
  int k = 2;
};

class DecoupledEnsemble {
 public:
  DecoupledEnsemble(const DecouplingConfig& config, int replica);
  DecoupledEnsemble(DecoupledEnsemble&&) noexcept;
  DecoupledEnsemble& operator=(DecoupledEnsemble&&) noexcept;
  ~DecoupledEnsemble();

  int n() const { return static_cast<int>(z_.size()); }
  int k() const { return static_cast<int>(ztilde_.size()); }
  double time() const { return t_; }
  const Eigen::ArrayXd& z() const { return z_; }
  const Eigen::ArrayXd& ztilde() const { return ztilde_; }

  /// Processes all events (main, copy and pool) up to time t.
  void advance_to(double t, const CoefficientModel& model);
  /// (1/k) sum_{i<k} (Z^i - Ztilde^i)^2.
  double discrepancy() const;

 private:
  struct Ranks;
  double partner(int i, int j, double frac) const;
  void set_z(int i, double value);

  Eigen::ArrayXd z_;
  Eigen::ArrayXd ztilde_;
  ReferencePool pool_;
  RandomStream rng_;
  RandomStream partner_rng_;
  RandomStream copy_rng_;
  double copy_rate_ = 0.0;
  double t_ = 0.0;
  Event main_next_;
  double main_time_ = 0.0;
  Event copy_next_;
  double copy_time_ = 0.0;
  std::unique_ptr<Ranks> ranks_;
};

struct DecouplingResult {
  std::vector<double> grid;
  Eigen::ArrayXd g_mean, g_stderr;
  int replicas = 0;
  // Sample correlation of (Ztilde^1, Ztilde^2) across replicas at the last
  // grid time and its standard error (1/sqrt(replicas)).
  double ztilde_correlation = 0.0;
  double ztilde_correlation_stderr = 0.0;
  double sup_g = 0.0;
};

DecouplingResult decoupling_experiment(const DecouplingConfig& config,
                                       const CoefficientModel& model, int threads);

// ---------------------------------------------------------------------------
// Chaos scan: W2 distance between the empirical measure and a pool proxy

struct ChaosScanConfig {
  SimConfig sim;                 // t_end, record_grid, initial, seed, replicas
  std::vector<int> n_list;
  int n_ref = 100000;
  // Also run nonlinear ensembles to report g = (1/N) sum (V^i - Z^i)^2 and
  // h = W2^2(empirical Z, pool).
  bool track_nonlinear = false;
};

struct ChaosSeries {
  int n = 0;
  Eigen::ArrayXd w2_mean, w2_stderr;
  Eigen::ArrayXd g_mean, g_stderr;  // empty unless tracked
  Eigen::ArrayXd h_mean, h_stderr;
  double sup_w2 = 0.0;
};

struct ChaosScanResult {
  std::vector<double> grid;
  int n_ref = 0;
  int replicas = 0;
  std::vector<ChaosSeries> series;
  // least-squares slope of log sup W2^2 against log N
  double loglog_slope = 0.0;
};

ChaosScanResult chaos_scan(const ChaosScanConfig& config, const CoefficientModel& model,
                           int threads);

}  // namespace kinex
