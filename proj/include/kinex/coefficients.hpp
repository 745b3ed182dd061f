#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "kinex/random.hpp"

namespace kinex {

/// One realization (l, r, lt, rt) of the trade coefficients. A trade between
/// riches (v, w) produces (l*v + r*w, lt*w + rt*v).
struct TradeTuple {
  double l = 0.0;
  double r = 0.0;
  double lt = 0.0;
  double rt = 0.0;

  friend bool operator==(const TradeTuple&, const TradeTuple&) = default;
};

enum class Family {
  deterministic,
  winner_takes_all,
  iid_uniform,
  complement_uniform,
  random_sharing,
  saving_propensity,
  empirical_table,
};

std::string_view family_name(Family family);
Family parse_family(std::string_view name);

/// A coefficient of the form offset + slope * U_source with U_source ~ U[0,1]
/// independent across sources. source < 0 means a constant.
struct AffineCoefficient {
  int source = -1;
  double offset = 0.0;
  double slope = 0.0;

  friend bool operator==(const AffineCoefficient&, const AffineCoefficient&) = default;
};

struct TableAtom {
  TradeTuple tuple;
  double weight = 1.0;

  friend bool operator==(const TableAtom&, const TableAtom&) = default;
};

/// Moment functionals of (L, R, Lt, Rt) that the analysis needs.
enum class Functional {
  power_sum,          // L^p + R^p + Lt^p + Rt^p
  direct_product,     // L R + Lt Rt
  cross_product,      // L Rt + Lt R
  same_side_product,  // L Lt + R Rt
  mixed_power,        // L^{p-1} R + L R^{p-1} + Lt^{p-1} Rt + Lt Rt^{p-1}
  growth_factor,      // (1 + (L + R + Lt + Rt - 2) / n)^p
  left_squares,       // L^2 + Lt^2
  right_squares,      // R^2 + Rt^2
  left_balance,       // L + Rt
  right_balance,      // Lt + R
};

struct MomentFunctional {
  Functional kind = Functional::power_sum;
  double p = 1.0;
  int n = 2;

  double operator()(const TradeTuple& t) const;

  static MomentFunctional power_sum(double p) { return {Functional::power_sum, p, 2}; }
  static MomentFunctional mixed_power(double p) { return {Functional::mixed_power, p, 2}; }
  static MomentFunctional growth_factor(int n, double p) { return {Functional::growth_factor, p, n}; }
  static MomentFunctional of(Functional kind) { return {kind, 1.0, 2}; }
};

struct MomentEstimate {
  double value = 0.0;
  double stderr = 0.0;
  bool exact = true;
  std::int64_t samples = 0;
};

struct MonteCarloOptions {
  std::int64_t samples = 1'000'000;
  int batches = 100;
  // Batch-mean standard error above this fraction of |value| is reported as
  // NonIntegrable.
  double max_relative_error = 0.25;
};

/// Law of the trade tuple. Continuous families are affine images of up to
/// four independent uniforms, discrete ones are finite atom tables; both
/// representations admit exact moment evaluation.
class CoefficientModel {
 public:
  static CoefficientModel deterministic(const TradeTuple& tuple);
  static CoefficientModel winner_takes_all();
  static CoefficientModel iid_uniform();
  static CoefficientModel complement_uniform();
  static CoefficientModel random_sharing();
  static CoefficientModel saving_propensity(double lambda);
  static CoefficientModel empirical_table(std::vector<TableAtom> atoms);

  Family family() const { return family_; }
  /// deterministic: the tuple; saving_propensity: {lambda}; others: empty.
  const std::vector<double>& params() const { return params_; }
  /// Normalized atoms for discrete families, empty otherwise.
  const std::vector<TableAtom>& atoms() const { return atoms_; }
  bool is_discrete() const { return !atoms_.empty(); }
  int uniform_count() const { return uniform_count_; }
  const std::array<AffineCoefficient, 4>& affine() const { return affine_; }

  bool closed_form_moments() const { return closed_form_; }
  /// Copy with the analytic moment route switched off (forces Monte Carlo).
  CoefficientModel with_closed_form(bool enabled) const;

  TradeTuple sample(RandomStream& rng) const;

  /// Exact E[phi]; requires closed_form_moments().
  double expectation(const MomentFunctional& phi) const;

  friend bool operator==(const CoefficientModel&, const CoefficientModel&) = default;

 private:
  CoefficientModel() = default;
  void validate() const;
  double affine_expectation(const MomentFunctional& phi) const;
  double quadrature_expectation(const MomentFunctional& phi, int nodes) const;

  Family family_ = Family::deterministic;
  std::vector<double> params_;
  std::vector<TableAtom> atoms_;
  std::vector<double> cumulative_;
  std::array<AffineCoefficient, 4> affine_{};
  int uniform_count_ = 0;
  bool closed_form_ = true;
};

TradeTuple sample_tuple(const CoefficientModel& model, RandomStream& rng);

/// E[phi(L, R, Lt, Rt)]: exact when the model has closed-form moments,
/// otherwise a batch-means Monte Carlo estimate on a fixed internal stream.
MomentEstimate mixed_moment(const CoefficientModel& model, const MomentFunctional& phi,
                            const MonteCarloOptions& options = {});

/// Monte Carlo estimate regardless of closed-form availability.
/// Throws NonIntegrable when the estimate does not stabilize.
MomentEstimate estimate_moment(const CoefficientModel& model, const MomentFunctional& phi,
                               RandomStream& rng, const MonteCarloOptions& options = {});

struct ParetoIndex {
  double value = 1.0;
  bool infinite = false;
  // No p > 1 satisfies the strict inequality; value is reported as 1.
  bool degenerate = false;
};

/// sup{p >= 1 : E[L^p + R^p + Lt^p + Rt^p] < 2}, searched on [1, p_max].
ParetoIndex pareto_index(const CoefficientModel& model, double p_max = 64.0, double tol = 1e-9);

struct ConditionFlags {
  bool strict_conservation = false;    // L + Rt = 1 = Lt + R a.s.
  bool pairwise_conservation = false;  // L + R = 1 = Lt + Rt a.s.
  bool weak_conservation = false;      // L + R + Lt + Rt = 2 a.s.
  bool mean_conservation = false;      // E[L + Rt] = 1 = E[Lt + R]
  bool nondegenerate = false;          // P(L, R, Lt, Rt in {0,1}) < 1

  friend bool operator==(const ConditionFlags&, const ConditionFlags&) = default;
};

enum class CheckMode { automatic, sampling };

/// Analytic condition flags (exact for every catalog family).
ConditionFlags check_conditions(const CoefficientModel& model, double tol = 1e-9);

/// Sample-based flags: a.s. identities must hold on every draw within tol,
/// mean conservation within max(1e-3, 4 SE). Closed-form models answer
/// analytically unless mode == sampling.
ConditionFlags check_conditions(const CoefficientModel& model, RandomStream& rng,
                                std::int64_t n_samples, double tol = 1e-9,
                                CheckMode mode = CheckMode::automatic);

struct ModelDiagnostics {
  int n = 2;
  double p = 2.0;
  ParetoIndex pareto;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double a_tilde = 0.0;  // 1 - E[L^2 + Lt^2] / 2
  double a_p = 0.0;
  double b_p = 0.0;
  double beta = 1.0;
  double gamma = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  ConditionFlags flags;
  // Largest standard error among the moments used (0 when exact).
  double stderr = 0.0;

  /// |a d - b c| <= tol.
  bool product_identity(double tol = 1e-9) const;
};

ModelDiagnostics diagnostics(const CoefficientModel& model, int n, double p,
                             const MonteCarloOptions& options = {});

}  // namespace kinex
