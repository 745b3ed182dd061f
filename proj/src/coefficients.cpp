#include "kinex/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "kinex/errors.hpp"
#include "kinex/quadrature.hpp"

namespace kinex {

namespace {

constexpr double kAnalyticTol = 1e-12;

std::array<double, 4> components(const TradeTuple& t) { return {t.l, t.r, t.lt, t.rt}; }

double affine_mean(const AffineCoefficient& x) { return x.offset + 0.5 * x.slope; }

bool is_constant(const AffineCoefficient& x) { return x.source < 0 || x.slope == 0.0; }

// E[(o + s U)^q] for q > -1 and o, o + s >= 0.
double affine_power(const AffineCoefficient& x, double q) {
  if (is_constant(x)) return std::pow(x.offset, q);
  const double lo = x.offset;
  const double hi = x.offset + x.slope;
  const double e = q + 1.0;
  if (lo > 0.0 && hi > 0.0) {
    return std::pow(lo, e) * std::expm1(e * std::log1p(x.slope / lo)) / (e * x.slope);
  }
  return (std::pow(hi, e) - std::pow(lo, e)) / (e * x.slope);
}

// E[X^q Y] for affine X, Y.
double affine_mixed(const AffineCoefficient& x, double q, const AffineCoefficient& y) {
  if (is_constant(y)) return y.offset == 0.0 ? 0.0 : affine_power(x, q) * y.offset;
  if (is_constant(x)) return std::pow(x.offset, q) * affine_mean(y);
  if (x.source != y.source) return affine_power(x, q) * affine_mean(y);
  // Same uniform: Y = c0 + k X.
  const double k = y.slope / x.slope;
  const double c0 = y.offset - k * x.offset;
  return c0 * affine_power(x, q) + k * affine_power(x, q + 1.0);
}

double mixed_term(double x, double y, double p) { return y == 0.0 ? 0.0 : std::pow(x, p - 1.0) * y; }

bool in_zero_one(double x, double tol) { return std::abs(x) <= tol || std::abs(x - 1.0) <= tol; }

// Affine combination x + y collapsed to per-source slopes.
struct AffineSum {
  double offset = 0.0;
  std::map<int, double> slopes;

  void add(const AffineCoefficient& x) {
    offset += x.offset;
    if (!is_constant(x)) slopes[x.source] += x.slope;
  }
  bool equals(double target, double tol) const {
    if (std::abs(offset - target) > tol) return false;
    return std::all_of(slopes.begin(), slopes.end(),
                       [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
  }
};

}  // namespace

std::string_view family_name(Family family) {
  switch (family) {
    case Family::deterministic: return "deterministic";
    case Family::winner_takes_all: return "winner_takes_all";
    case Family::iid_uniform: return "iid_uniform";
    case Family::complement_uniform: return "complement_uniform";
    case Family::random_sharing: return "random_sharing";
    case Family::saving_propensity: return "saving_propensity";
    case Family::empirical_table: return "empirical_table";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (auto f : {Family::deterministic, Family::winner_takes_all, Family::iid_uniform,
                 Family::complement_uniform, Family::random_sharing, Family::saving_propensity,
                 Family::empirical_table}) {
    if (family_name(f) == name) return f;
  }
  throw InvalidModel("unknown coefficient family '" + std::string(name) + "'");
}

double MomentFunctional::operator()(const TradeTuple& t) const {
  switch (kind) {
    case Functional::power_sum:
      return std::pow(t.l, p) + std::pow(t.r, p) + std::pow(t.lt, p) + std::pow(t.rt, p);
    case Functional::direct_product: return t.l * t.r + t.lt * t.rt;
    case Functional::cross_product: return t.l * t.rt + t.lt * t.r;
    case Functional::same_side_product: return t.l * t.lt + t.r * t.rt;
    case Functional::mixed_power:
      return mixed_term(t.l, t.r, p) + mixed_term(t.r, t.l, p) + mixed_term(t.lt, t.rt, p) +
             mixed_term(t.rt, t.lt, p);
    case Functional::growth_factor:
      return std::pow(1.0 + (t.l + t.r + t.lt + t.rt - 2.0) / n, p);
    case Functional::left_squares: return t.l * t.l + t.lt * t.lt;
    case Functional::right_squares: return t.r * t.r + t.rt * t.rt;
    case Functional::left_balance: return t.l + t.rt;
    case Functional::right_balance: return t.lt + t.r;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Catalog

CoefficientModel CoefficientModel::deterministic(const TradeTuple& tuple) {
  CoefficientModel m;
  m.family_ = Family::deterministic;
  m.params_ = {tuple.l, tuple.r, tuple.lt, tuple.rt};
  m.atoms_ = {{tuple, 1.0}};
  m.cumulative_ = {1.0};
  m.validate();
  return m;
}

CoefficientModel CoefficientModel::winner_takes_all() {
  CoefficientModel m = deterministic({1.0, 1.0, 0.0, 0.0});
  m.family_ = Family::winner_takes_all;
  m.params_.clear();
  return m;
}

CoefficientModel CoefficientModel::iid_uniform() {
  CoefficientModel m;
  m.family_ = Family::iid_uniform;
  m.uniform_count_ = 4;
  m.affine_ = {{{0, 0.0, 1.0}, {1, 0.0, 1.0}, {2, 0.0, 1.0}, {3, 0.0, 1.0}}};
  m.validate();
  return m;
}

CoefficientModel CoefficientModel::complement_uniform() {
  CoefficientModel m;
  m.family_ = Family::complement_uniform;
  m.uniform_count_ = 2;
  m.affine_ = {{{0, 0.0, 1.0}, {1, 0.0, 1.0}, {0, 1.0, -1.0}, {1, 1.0, -1.0}}};
  m.validate();
  return m;
}

CoefficientModel CoefficientModel::random_sharing() {
  CoefficientModel m;
  m.family_ = Family::random_sharing;
  m.uniform_count_ = 1;
  m.affine_ = {{{0, 0.0, 1.0}, {0, 0.0, 1.0}, {0, 1.0, -1.0}, {0, 1.0, -1.0}}};
  m.validate();
  return m;
}

CoefficientModel CoefficientModel::saving_propensity(double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw InvalidModel("saving_propensity: lambda must lie in [0, 1)");
  }
  CoefficientModel m;
  m.family_ = Family::saving_propensity;
  m.params_ = {lambda};
  m.uniform_count_ = 1;
  const double s = 1.0 - lambda;
  // v' = lambda v + eps (1 - lambda)(v + w), w' = lambda w + (1 - eps)(1 - lambda)(v + w)
  m.affine_ = {{{0, lambda, s}, {0, 0.0, s}, {0, lambda + s, -s}, {0, s, -s}}};
  m.validate();
  return m;
}

CoefficientModel CoefficientModel::empirical_table(std::vector<TableAtom> atoms) {
  if (atoms.empty()) throw InvalidModel("empirical_table: no atoms");
  double total = 0.0;
  for (const auto& atom : atoms) {
    if (!(atom.weight > 0.0) || !std::isfinite(atom.weight)) {
      throw InvalidModel("empirical_table: atom weights must be positive and finite");
    }
    total += atom.weight;
  }
  CoefficientModel m;
  m.family_ = Family::empirical_table;
  double running = 0.0;
  for (auto& atom : atoms) {
    atom.weight /= total;
    running += atom.weight;
    m.cumulative_.push_back(running);
  }
  m.cumulative_.back() = 1.0;
  m.atoms_ = std::move(atoms);
  m.validate();
  return m;
}

CoefficientModel CoefficientModel::with_closed_form(bool enabled) const {
  CoefficientModel copy = *this;
  copy.closed_form_ = enabled;
  return copy;
}

void CoefficientModel::validate() const {
  for (const auto& atom : atoms_) {
    for (double x : components(atom.tuple)) {
      if (!std::isfinite(x) || x < 0.0) {
        throw InvalidModel("trade coefficients must be finite and nonnegative");
      }
    }
  }
  for (const auto& x : affine_) {
    if (uniform_count_ == 0) break;
    if (x.offset < 0.0 || x.offset + x.slope < 0.0) {
      throw InvalidModel("affine coefficient takes negative values");
    }
  }
  const double left = expectation(MomentFunctional::of(Functional::left_balance));
  const double right = expectation(MomentFunctional::of(Functional::right_balance));
  if (std::abs(left - 1.0) > kAnalyticTol || std::abs(right - 1.0) > kAnalyticTol) {
    throw InvalidModel("model violates mean conservation E[L + Rt] = 1 = E[Lt + R]");
  }
}

TradeTuple CoefficientModel::sample(RandomStream& rng) const {
  if (is_discrete()) {
    if (atoms_.size() == 1) return atoms_.front().tuple;
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto idx = std::min<std::size_t>(it - cumulative_.begin(), atoms_.size() - 1);
    return atoms_[idx].tuple;
  }
  std::array<double, 4> u{};
  for (int k = 0; k < uniform_count_; ++k) u[k] = rng.uniform();
  auto eval = [&u](const AffineCoefficient& x) {
    return is_constant(x) ? x.offset : x.offset + x.slope * u[x.source];
  };
  return {eval(affine_[0]), eval(affine_[1]), eval(affine_[2]), eval(affine_[3])};
}

double CoefficientModel::expectation(const MomentFunctional& phi) const {
  if (is_discrete()) {
    double total = 0.0;
    for (const auto& atom : atoms_) total += atom.weight * phi(atom.tuple);
    return total;
  }
  return affine_expectation(phi);
}

double CoefficientModel::affine_expectation(const MomentFunctional& phi) const {
  const auto& [l, r, lt, rt] = affine_;
  switch (phi.kind) {
    case Functional::power_sum:
      return affine_power(l, phi.p) + affine_power(r, phi.p) + affine_power(lt, phi.p) +
             affine_power(rt, phi.p);
    case Functional::mixed_power: {
      const double q = phi.p - 1.0;
      return affine_mixed(l, q, r) + affine_mixed(r, q, l) + affine_mixed(lt, q, rt) +
             affine_mixed(rt, q, lt);
    }
    case Functional::growth_factor: {
      AffineSum s;
      for (const auto& x : affine_) s.add(x);
      if (s.equals(s.offset, 0.0)) return phi(TradeTuple{s.offset, 0.0, 0.0, 0.0});
      const double rounded = std::round(phi.p);
      const bool polynomial = phi.p == rounded && rounded <= 40.0;
      const int nodes = polynomial ? static_cast<int>(rounded) / 2 + 1 : 24;
      return quadrature_expectation(phi, nodes);
    }
    default:
      // Remaining functionals are polynomials of degree <= 2 per uniform.
      return quadrature_expectation(phi, 2);
  }
}

double CoefficientModel::quadrature_expectation(const MomentFunctional& phi, int nodes) const {
  const QuadratureRule& rule = gauss_legendre(nodes);
  const int dims = uniform_count_;
  std::array<int, 4> index{};
  double total = 0.0;
  while (true) {
    std::array<double, 4> u{};
    double weight = 1.0;
    for (int k = 0; k < dims; ++k) {
      u[k] = rule.nodes[index[k]];
      weight *= rule.weights[index[k]];
    }
    auto eval = [&u](const AffineCoefficient& x) {
      return is_constant(x) ? x.offset : x.offset + x.slope * u[x.source];
    };
    total += weight * phi({eval(affine_[0]), eval(affine_[1]), eval(affine_[2]), eval(affine_[3])});
    int k = 0;
    while (k < dims && ++index[k] == nodes) index[k++] = 0;
    if (k == dims) break;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Moments

TradeTuple sample_tuple(const CoefficientModel& model, RandomStream& rng) {
  return model.sample(rng);
}

MomentEstimate estimate_moment(const CoefficientModel& model, const MomentFunctional& phi,
                               RandomStream& rng, const MonteCarloOptions& options) {
  const int batches = std::max(2, options.batches);
  const std::int64_t per_batch = std::max<std::int64_t>(1, options.samples / batches);
  Eigen::ArrayXd means(batches);
  for (int b = 0; b < batches; ++b) {
    double sum = 0.0;
    for (std::int64_t s = 0; s < per_batch; ++s) {
      const double x = phi(model.sample(rng));
      if (!std::isfinite(x)) throw NonIntegrable("Monte Carlo draw is not finite");
      sum += x;
    }
    means[b] = sum / static_cast<double>(per_batch);
  }
  MomentEstimate est;
  est.exact = false;
  est.samples = per_batch * batches;
  est.value = means.mean();
  const double var = (means - est.value).square().sum() / (batches - 1);
  est.stderr = std::sqrt(var / batches);
  if (!std::isfinite(est.value)) throw NonIntegrable("Monte Carlo estimate is not finite");
  if (est.stderr > options.max_relative_error * std::abs(est.value)) {
    throw NonIntegrable("Monte Carlo estimate did not stabilize (standard error " +
                        std::to_string(est.stderr) + " for mean " + std::to_string(est.value) + ")");
  }
  return est;
}

MomentEstimate mixed_moment(const CoefficientModel& model, const MomentFunctional& phi,
                            const MonteCarloOptions& options) {
  if (model.closed_form_moments()) return {model.expectation(phi), 0.0, true, 0};
  RandomStream rng(0x6d6f6d656e7473ULL);
  return estimate_moment(model, phi, rng, options);
}

ParetoIndex pareto_index(const CoefficientModel& model, double p_max, double tol) {
  auto excess = [&model](double p) {
    return mixed_moment(model, MomentFunctional::power_sum(p)).value - 2.0;
  };
  ParetoIndex out;
  p_max = std::max(p_max, 1.0);
  if (excess(p_max) < 0.0) {
    out.value = std::numeric_limits<double>::infinity();
    out.infinite = true;
    return out;
  }
  // The excess is convex in p and vanishes at p = 1, so the admissible set is
  // an interval (1, alpha) whenever its minimum is negative.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 1.0, hi = p_max;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double f1 = excess(x1), f2 = excess(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = excess(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = excess(x2);
    }
  }
  const double p_min = f1 < f2 ? x1 : x2;
  const double f_min = std::min(f1, f2);
  if (!(f_min < -kAnalyticTol)) {
    out.value = 1.0;
    out.degenerate = true;
    return out;
  }
  double inside = p_min, outside = p_max;
  while (outside - inside > tol) {
    const double mid = 0.5 * (inside + outside);
    (excess(mid) < 0.0 ? inside : outside) = mid;
  }
  out.value = 0.5 * (inside + outside);
  return out;
}

// ---------------------------------------------------------------------------
// Conditions

ConditionFlags check_conditions(const CoefficientModel& model, double tol) {
  ConditionFlags flags;
  if (!model.closed_form_moments()) {
    RandomStream rng(0x636f6e64ULL);
    return check_conditions(model, rng, 1'000'000, tol, CheckMode::sampling);
  }
  const double left = model.expectation(MomentFunctional::of(Functional::left_balance));
  const double right = model.expectation(MomentFunctional::of(Functional::right_balance));
  flags.mean_conservation = std::abs(left - 1.0) <= tol && std::abs(right - 1.0) <= tol;

  if (model.is_discrete()) {
    flags.strict_conservation = flags.pairwise_conservation = flags.weak_conservation = true;
    for (const auto& atom : model.atoms()) {
      const auto& t = atom.tuple;
      flags.strict_conservation &=
          std::abs(t.l + t.rt - 1.0) <= tol && std::abs(t.lt + t.r - 1.0) <= tol;
      flags.pairwise_conservation &=
          std::abs(t.l + t.r - 1.0) <= tol && std::abs(t.lt + t.rt - 1.0) <= tol;
      flags.weak_conservation &= std::abs(t.l + t.r + t.lt + t.rt - 2.0) <= tol;
      for (double x : components(t)) flags.nondegenerate |= !in_zero_one(x, tol);
    }
    return flags;
  }

  const auto& [l, r, lt, rt] = model.affine();
  auto pair_is = [tol](const AffineCoefficient& x, const AffineCoefficient& y, double target) {
    AffineSum s;
    s.add(x);
    s.add(y);
    return s.equals(target, tol);
  };
  flags.strict_conservation = pair_is(l, rt, 1.0) && pair_is(lt, r, 1.0);
  flags.pairwise_conservation = pair_is(l, r, 1.0) && pair_is(lt, rt, 1.0);
  AffineSum total;
  for (const auto& x : model.affine()) total.add(x);
  flags.weak_conservation = total.equals(2.0, tol);
  for (const auto& x : model.affine()) {
    flags.nondegenerate |= !is_constant(x) || !in_zero_one(x.offset, tol);
  }
  return flags;
}

ConditionFlags check_conditions(const CoefficientModel& model, RandomStream& rng,
                                std::int64_t n_samples, double tol, CheckMode mode) {
  if (mode == CheckMode::automatic && model.closed_form_moments()) {
    return check_conditions(model, tol);
  }
  ConditionFlags flags{true, true, true, false, false};
  n_samples = std::max<std::int64_t>(n_samples, 1);
  double sum_left = 0.0, sum_right = 0.0, sq_left = 0.0, sq_right = 0.0;
  for (std::int64_t s = 0; s < n_samples; ++s) {
    const TradeTuple t = model.sample(rng);
    flags.strict_conservation &=
        std::abs(t.l + t.rt - 1.0) <= tol && std::abs(t.lt + t.r - 1.0) <= tol;
    flags.pairwise_conservation &=
        std::abs(t.l + t.r - 1.0) <= tol && std::abs(t.lt + t.rt - 1.0) <= tol;
    flags.weak_conservation &= std::abs(t.l + t.r + t.lt + t.rt - 2.0) <= tol;
    for (double x : components(t)) flags.nondegenerate |= !in_zero_one(x, tol);
    const double left = t.l + t.rt, right = t.lt + t.r;
    sum_left += left;
    sum_right += right;
    sq_left += left * left;
    sq_right += right * right;
  }
  const auto n = static_cast<double>(n_samples);
  auto within = [n](double sum, double sq) {
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sq - n * mean * mean) / (n - 1)) : 0.0;
    return std::abs(mean - 1.0) <= std::max(1e-3, 4.0 * std::sqrt(var / n));
  };
  flags.mean_conservation = within(sum_left, sq_left) && within(sum_right, sq_right);
  return flags;
}

// ---------------------------------------------------------------------------
// Diagnostics

bool ModelDiagnostics::product_identity(double tol) const { return std::abs(a * d - b * c) <= tol; }

ModelDiagnostics diagnostics(const CoefficientModel& model, int n, double p,
                             const MonteCarloOptions& options) {
  if (n < 2) throw InvalidConfig("diagnostics: N must be at least 2");
  if (!(p > 0.0)) throw InvalidConfig("diagnostics: p must be positive");
  ModelDiagnostics out;
  out.n = n;
  out.p = p;
  double worst_se = 0.0;
  auto moment = [&](const MomentFunctional& phi) {
    const MomentEstimate est = mixed_moment(model, phi, options);
    worst_se = std::max(worst_se, est.stderr);
    return est.value;
  };
  out.a = 1.0 - 0.5 * moment(MomentFunctional::power_sum(2.0));
  out.b = moment(MomentFunctional::of(Functional::direct_product));
  out.c = moment(MomentFunctional::of(Functional::cross_product));
  out.d = 1.0 - moment(MomentFunctional::of(Functional::same_side_product));
  out.a_tilde = 1.0 - 0.5 * moment(MomentFunctional::of(Functional::left_squares));
  out.a_p = 1.0 - 0.5 * moment(MomentFunctional::power_sum(p));
  out.b_p = std::pow(2.0, p - 2.0) * moment(MomentFunctional::mixed_power(p));
  out.beta = p == 1.0 ? 1.0 : moment(MomentFunctional::growth_factor(n, p));
  out.gamma = 0.5 * n * (1.0 - out.beta);

  // Roots of x^2 + s x + q with s = a + d/(N-1), q = (ad - bc)/(N-1); the
  // discriminant equals (a - d/(N-1))^2 + 4bc/(N-1) >= 0.
  const double d_scaled = out.d / (n - 1);
  const double s = out.a + d_scaled;
  const double q = (out.a * out.d - out.b * out.c) / (n - 1);
  const double root = std::sqrt(std::max(0.0, (out.a - d_scaled) * (out.a - d_scaled) +
                                                  4.0 * out.b * out.c / (n - 1)));
  if (s >= 0.0) {
    out.lambda2 = -0.5 * (s + root);
    out.lambda1 = out.lambda2 != 0.0 ? q / out.lambda2 : 0.0;
  } else {
    out.lambda1 = 0.5 * (-s + root);
    out.lambda2 = out.lambda1 != 0.0 ? q / out.lambda1 : 0.0;
  }
  out.flags = check_conditions(model);
  out.pareto = pareto_index(model);
  out.stderr = worst_se;
  return out;
}

}  // namespace kinex
