#include "kinex/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <ext/pb_ds/assoc_container.hpp>
#include <ext/pb_ds/tree_policy.hpp>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "kinex/analytics.hpp"
#include "kinex/errors.hpp"
#include "kinex/parallel.hpp"
#include "kinex/stats.hpp"

namespace kinex {

namespace {

using Key = std::pair<double, int>;
using OrderTree = __gnu_pbds::tree<Key, __gnu_pbds::null_type, std::less<Key>,
                                   __gnu_pbds::rb_tree_tag,
                                   __gnu_pbds::tree_order_statistics_node_update>;

OrderTree build_tree(const Eigen::ArrayXd& values) {
  OrderTree tree;
  for (Eigen::Index i = 0; i < values.size(); ++i) tree.insert({values[i], static_cast<int>(i)});
  return tree;
}

void retag(OrderTree& tree, Eigen::ArrayXd& values, int i, double value) {
  tree.erase({values[i], i});
  values[i] = value;
  tree.insert({value, i});
}

void require_event_time(const SimConfig& sim) {
  if (sim.time_mode != TimeMode::event_time) {
    throw InvalidConfig("coupling experiments run in event_time mode");
  }
}

Eigen::ArrayXd draw_pool(const InitialCondition& initial, int n_ref, RandomStream& rng) {
  if (n_ref < 2) throw InvalidConfig("n_ref must be at least 2");
  if (initial.kind != InitialKind::from_file) return initial.draw(n_ref, rng);
  Eigen::ArrayXd out(n_ref);
  const auto size = static_cast<std::uint64_t>(initial.values.size());
  for (int i = 0; i < n_ref; ++i) out[i] = initial.values[rng.below(size)];
  return out;
}

struct SeriesAccumulator {
  // replica x grid
  std::vector<Eigen::ArrayXd> rows;

  void reduce(Eigen::ArrayXd& mean, Eigen::ArrayXd& stderr) const {
    const auto points = rows.empty() ? 0 : rows.front().size();
    mean.resize(points);
    stderr.resize(points);
    Eigen::ArrayXd column(static_cast<Eigen::Index>(rows.size()));
    for (Eigen::Index g = 0; g < points; ++g) {
      for (std::size_t r = 0; r < rows.size(); ++r) column[static_cast<Eigen::Index>(r)] = rows[r][g];
      const auto ms = mean_stderr(column);
      mean[g] = ms.mean;
      stderr[g] = ms.stderr;
    }
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Coupled pairs

double CoupledState::mean_square_gap() const { return (v - u).square().mean(); }

CoupledState make_coupled(Eigen::ArrayXd v, Eigen::ArrayXd u, RandomStream rng) {
  if (v.size() != u.size() || v.size() < 2) {
    throw InvalidConfig("coupled systems need equal sizes of at least 2");
  }
  const double sv = compensated_sum(v);
  const double su = compensated_sum(u);
  const double scale = std::max({std::abs(sv), std::abs(su), std::numeric_limits<double>::min()});
  if (std::abs(sv - su) > 1e-9 * scale) {
    throw UnequalTotals("initial totals differ: " + std::to_string(sv) + " vs " + std::to_string(su));
  }
  CoupledState cs;
  cs.v = std::move(v);
  cs.u = std::move(u);
  cs.rng = rng;
  return cs;
}

Event coupled_step(CoupledState& cs, const CoefficientModel& model) {
  const Event e = draw_event(static_cast<int>(cs.v.size()), model, cs.rng);
  apply_trade(cs.v, e.first, e.second, e.tuple);
  apply_trade(cs.u, e.first, e.second, e.tuple);
  cs.t += e.wait;
  ++cs.jumps;
  return e;
}

std::string_view paired_init_name(PairedInit kind) {
  switch (kind) {
    case PairedInit::identical: return "identical";
    case PairedInit::shuffled: return "shuffled";
    case PairedInit::flattened: return "flattened";
    case PairedInit::resampled: return "resampled";
  }
  return "unknown";
}

PairedInit parse_paired_init(std::string_view name) {
  for (auto k : {PairedInit::identical, PairedInit::shuffled, PairedInit::flattened,
                 PairedInit::resampled}) {
    if (paired_init_name(k) == name) return k;
  }
  throw InvalidConfig("unknown paired init '" + std::string(name) + "'");
}

CoupledState init_coupled(const SimConfig& config, int replica, PairedInit kind) {
  ParticleState s = init_state(config, replica);
  auto rng = RandomStream::child(config.seed, static_cast<std::uint64_t>(replica), lane::paired_init);
  const Eigen::Index n = s.wealth.size();
  Eigen::ArrayXd u = s.wealth;
  switch (kind) {
    case PairedInit::identical: break;
    case PairedInit::shuffled:
      for (Eigen::Index i = n - 1; i > 0; --i) {
        std::swap(u[i], u[static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
      }
      break;
    case PairedInit::flattened: u.setConstant(s.mean()); break;
    case PairedInit::resampled: {
      Eigen::ArrayXd w = config.initial.kind == InitialKind::from_file
                             ? draw_pool(config.initial, static_cast<int>(n), rng)
                             : config.initial.draw(static_cast<int>(n), rng);
      const double tw = compensated_sum(w);
      if (tw > 0.0) {
        u = w * (s.total() / tw);
      } else {
        u.setConstant(s.mean());
      }
      break;
    }
  }
  return make_coupled(std::move(s.wealth), std::move(u), s.rng);
}

double fit_decay_rate(const std::vector<double>& grid, const Eigen::ArrayXd& d, double horizon,
                      int* points_used) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto v = d[static_cast<Eigen::Index>(k)];
    if (grid[k] <= horizon * (1.0 + 1e-12) && v > 0.0 && std::isfinite(v)) {
      xs.push_back(grid[k]);
      ys.push_back(std::log(v));
    }
  }
  if (points_used) *points_used = static_cast<int>(xs.size());
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto fit = least_squares(Eigen::Map<Eigen::ArrayXd>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                                 Eigen::Map<Eigen::ArrayXd>(ys.data(), static_cast<Eigen::Index>(ys.size())));
  return -fit.slope;
}

ContractionResult contraction_experiment(const SimConfig& config, const CoefficientModel& model,
                                         PairedInit kind, int threads) {
  config.validate();
  require_event_time(config);
  const auto& grid = config.record_grid;
  const auto points = static_cast<Eigen::Index>(grid.size());
  SeriesAccumulator d_acc, d1_acc;
  d_acc.rows.resize(static_cast<std::size_t>(config.replicas));
  d1_acc.rows.resize(static_cast<std::size_t>(config.replicas));
  parallel_for(config.replicas, threads, [&](int r) {
    CoupledState cs = init_coupled(config, r, kind);
    Eigen::ArrayXd d(points), d1(points);
    Eigen::Index k = 0;
    const int n = config.n_particles;
    while (true) {
      const Event e = draw_event(n, model, cs.rng);
      const double next = cs.t + e.wait;
      while (k < points && grid[static_cast<std::size_t>(k)] < next) {
        d[k] = cs.mean_square_gap();
        d1[k] = (cs.v[0] - cs.u[0]) * (cs.v[0] - cs.u[0]);
        ++k;
      }
      if (next > config.t_end) break;
      apply_trade(cs.v, e.first, e.second, e.tuple);
      apply_trade(cs.u, e.first, e.second, e.tuple);
      cs.t = next;
      ++cs.jumps;
    }
    d_acc.rows[static_cast<std::size_t>(r)] = std::move(d);
    d1_acc.rows[static_cast<std::size_t>(r)] = std::move(d1);
  });

  ContractionResult out;
  out.grid = grid;
  out.replicas = config.replicas;
  d_acc.reduce(out.d_mean, out.d_stderr);
  d1_acc.reduce(out.d1_mean, out.d1_stderr);
  out.predicted_rate = contraction_rate(diagnostics(model, config.n_particles, 2.0), config.n_particles);
  out.fit_horizon = out.predicted_rate > 0.0 ? std::min(3.0 / out.predicted_rate, config.t_end)
                                             : config.t_end;
  out.fitted_rate = fit_decay_rate(grid, out.d_mean, out.fit_horizon, &out.fit_points);
  return out;
}

// ---------------------------------------------------------------------------
// Reference pool

struct ReferencePool::Index {
  OrderTree tree;
};

ReferencePool::ReferencePool(Eigen::ArrayXd values, RandomStream rng, bool indexed)
    : values_(std::move(values)), rng_(rng) {
  if (values_.size() < 2) throw InvalidConfig("reference pool needs at least 2 particles");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0) || !std::isfinite(values_[i])) {
      throw InvalidMeasure("reference pool values must be finite and nonnegative");
    }
  }
  if (indexed) index_ = std::make_unique<Index>(Index{build_tree(values_)});
}

ReferencePool::ReferencePool(ReferencePool&&) noexcept = default;
ReferencePool& ReferencePool::operator=(ReferencePool&&) noexcept = default;
ReferencePool::~ReferencePool() = default;

void ReferencePool::draw_next(const CoefficientModel& model) {
  next_ = draw_event(static_cast<int>(values_.size()), model, rng_);
  next_time_ = t_ + next_.wait;
  primed_ = true;
}

void ReferencePool::advance_to(double t, const CoefficientModel& model) {
  if (!primed_) draw_next(model);
  while (next_time_ <= t) {
    const int i = next_.first;
    const int j = next_.second;
    const double vi = values_[i];
    const double vj = values_[j];
    const double ni = next_.tuple.l * vi + next_.tuple.r * vj;
    const double nj = next_.tuple.lt * vj + next_.tuple.rt * vi;
    if (index_) {
      retag(index_->tree, values_, i, ni);
      retag(index_->tree, values_, j, nj);
    } else {
      values_[i] = ni;
      values_[j] = nj;
    }
    t_ = next_time_;
    draw_next(model);
  }
}

double ReferencePool::mean() const { return compensated_sum(values_) / static_cast<double>(values_.size()); }

double ReferencePool::quantile(double u) const {
  if (!index_) throw InvalidConfig("quantile queries need an indexed reference pool");
  const auto n = static_cast<Eigen::Index>(values_.size());
  const auto k = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(u * static_cast<double>(n))), 0, n - 1);
  return index_->tree.find_by_order(static_cast<std::size_t>(k))->first;
}

// ---------------------------------------------------------------------------
// Nonlinear ensemble

double comonotone_level(const Eigen::Ref<const Eigen::ArrayXd>& z, int i, int j, double frac) {
  const auto n = static_cast<int>(z.size());
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
    throw IndexOutOfRange("comonotone_level: bad particle indices");
  }
  const Key target{z[j], j};
  int rank = 0;
  for (int k = 0; k < n; ++k) {
    if (k != i && Key{z[k], k} < target) ++rank;
  }
  return (rank + frac) / (n - 1);
}

double nonlinear_partner(const Eigen::Ref<const Eigen::ArrayXd>& z, int i, int j, double frac,
                         const EmpiricalMeasured& reference) {
  return reference.quantile(comonotone_level(z, i, j, frac));
}

struct NonlinearEnsemble::Ranks {
  OrderTree tree;
};

namespace {

double tree_level(const OrderTree& tree, const Eigen::ArrayXd& z, int i, int j, double frac) {
  auto rank = static_cast<double>(tree.order_of_key({z[j], j}));
  if (Key{z[i], i} < Key{z[j], j}) rank -= 1.0;
  return (rank + frac) / static_cast<double>(z.size() - 1);
}

ReferencePool make_pool(const SimConfig& sim, int n_ref, int replica, bool indexed) {
  auto rng = RandomStream::child(sim.seed, static_cast<std::uint64_t>(replica), lane::pool);
  Eigen::ArrayXd values = draw_pool(sim.initial, n_ref, rng);
  return ReferencePool(std::move(values), rng, indexed);
}

}  // namespace

NonlinearEnsemble::NonlinearEnsemble(const NonlinearConfig& config, int replica)
    : pool_(make_pool(config.sim, config.n_ref, replica, true)) {
  config.sim.validate();
  require_event_time(config.sim);
  ParticleState s = init_state(config.sim, replica);
  v_ = std::move(s.wealth);
  z_ = v_;
  rng_ = s.rng;
  partner_rng_ = RandomStream::child(config.sim.seed, static_cast<std::uint64_t>(replica),
                                     lane::partner_draws);
  v_jumps_.setZero(v_.size());
  z_jumps_.setZero(v_.size());
  ranks_ = std::make_unique<Ranks>(Ranks{build_tree(z_)});
}

NonlinearEnsemble::NonlinearEnsemble(NonlinearEnsemble&&) noexcept = default;
NonlinearEnsemble& NonlinearEnsemble::operator=(NonlinearEnsemble&&) noexcept = default;
NonlinearEnsemble::~NonlinearEnsemble() = default;

double NonlinearEnsemble::partner(int i, int j, double frac) const {
  return pool_.quantile(tree_level(ranks_->tree, z_, i, j, frac));
}

void NonlinearEnsemble::set_z(int i, double value) { retag(ranks_->tree, z_, i, value); }

Event NonlinearEnsemble::step(const CoefficientModel& model, double* f_first, double* f_second) {
  if (!pending_) next_ = draw_event(n(), model, rng_);
  pending_ = false;
  const Event e = next_;
  const double t_next = t_ + e.wait;
  pool_.advance_to(t_next, model);
  const int i = e.first;
  const int j = e.second;
  const double fi = partner(i, j, partner_rng_.uniform());
  const double fj = partner(j, i, partner_rng_.uniform());
  apply_trade(v_, i, j, e.tuple);
  const double zi = e.tuple.l * z_[i] + e.tuple.r * fi;
  const double zj = e.tuple.lt * z_[j] + e.tuple.rt * fj;
  set_z(i, zi);
  set_z(j, zj);
  ++v_jumps_[i];
  ++v_jumps_[j];
  ++z_jumps_[i];
  ++z_jumps_[j];
  t_ = t_next;
  ++jumps_;
  if (f_first) *f_first = fi;
  if (f_second) *f_second = fj;
  return e;
}

void NonlinearEnsemble::advance_to(double t, const CoefficientModel& model) {
  while (true) {
    if (!pending_) {
      next_ = draw_event(n(), model, rng_);
      pending_ = true;
    }
    if (t_ + next_.wait > t) break;
    step(model);
  }
  pool_.advance_to(t, model);
}

// ---------------------------------------------------------------------------
// Decoupled ensemble

struct DecoupledEnsemble::Ranks {
  OrderTree tree;
};

DecoupledEnsemble::DecoupledEnsemble(const DecouplingConfig& config, int replica)
    : pool_(make_pool(config.sim, config.n_ref, replica, true)) {
  config.sim.validate();
  require_event_time(config.sim);
  const int n = config.sim.n_particles;
  if (config.k < 2 || config.k > n) throw InvalidConfig("decoupling needs 2 <= k <= N");
  ParticleState s = init_state(config.sim, replica);
  z_ = std::move(s.wealth);
  ztilde_ = z_.head(config.k);
  rng_ = s.rng;
  partner_rng_ = RandomStream::child(config.sim.seed, static_cast<std::uint64_t>(replica),
                                     lane::partner_draws);
  copy_rng_ = RandomStream::child(config.sim.seed, static_cast<std::uint64_t>(replica),
                                  lane::copy_events);
  copy_rate_ = 0.5 * config.k * (config.k - 1) / (n - 1);
  ranks_ = std::make_unique<Ranks>(Ranks{build_tree(z_)});
  main_time_ = -1.0;
  copy_time_ = -1.0;
}

DecoupledEnsemble::DecoupledEnsemble(DecoupledEnsemble&&) noexcept = default;
DecoupledEnsemble& DecoupledEnsemble::operator=(DecoupledEnsemble&&) noexcept = default;
DecoupledEnsemble::~DecoupledEnsemble() = default;

double DecoupledEnsemble::partner(int i, int j, double frac) const {
  return pool_.quantile(tree_level(ranks_->tree, z_, i, j, frac));
}

void DecoupledEnsemble::set_z(int i, double value) { retag(ranks_->tree, z_, i, value); }

void DecoupledEnsemble::advance_to(double t, const CoefficientModel& model) {
  const int k = this->k();
  auto draw_main = [&](double from) {
    main_next_ = draw_event(n(), model, rng_);
    main_time_ = from + main_next_.wait;
  };
  auto draw_copy = [&](double from) {
    copy_next_.wait = copy_rng_.exponential(copy_rate_);
    std::tie(copy_next_.first, copy_next_.second) = draw_pair(k, copy_rng_);
    copy_next_.tuple = model.sample(copy_rng_);
    copy_time_ = from + copy_next_.wait;
  };
  if (main_time_ < 0.0) draw_main(0.0);
  if (copy_time_ < 0.0) draw_copy(0.0);

  while (std::min(main_time_, copy_time_) <= t) {
    if (main_time_ <= copy_time_) {
      pool_.advance_to(main_time_, model);
      const auto& e = main_next_;
      const int i = e.first;
      const int j = e.second;
      const double fi = partner(i, j, partner_rng_.uniform());
      const double fj = partner(j, i, partner_rng_.uniform());
      if (i < k) ztilde_[i] = e.tuple.l * ztilde_[i] + e.tuple.r * fi;
      if (j < k && i >= k) ztilde_[j] = e.tuple.lt * ztilde_[j] + e.tuple.rt * fj;
      const double zi = e.tuple.l * z_[i] + e.tuple.r * fi;
      const double zj = e.tuple.lt * z_[j] + e.tuple.rt * fj;
      set_z(i, zi);
      set_z(j, zj);
      t_ = main_time_;
      draw_main(main_time_);
    } else {
      pool_.advance_to(copy_time_, model);
      const auto& e = copy_next_;
      const int i = e.first;
      const int j = e.second;
      const double fj = partner(j, i, copy_rng_.uniform());
      ztilde_[j] = e.tuple.lt * ztilde_[j] + e.tuple.rt * fj;
      t_ = copy_time_;
      draw_copy(copy_time_);
    }
  }
  pool_.advance_to(t, model);
}

double DecoupledEnsemble::discrepancy() const {
  return (z_.head(ztilde_.size()) - ztilde_).square().mean();
}

DecouplingResult decoupling_experiment(const DecouplingConfig& config,
                                       const CoefficientModel& model, int threads) {
  config.sim.validate();
  require_event_time(config.sim);
  if (config.k < 2 || config.k > config.sim.n_particles) {
    throw InvalidConfig("decoupling needs 2 <= k <= N");
  }
  const auto& grid = config.sim.record_grid;
  const int replicas = config.sim.replicas;
  SeriesAccumulator acc;
  acc.rows.resize(static_cast<std::size_t>(replicas));
  Eigen::ArrayXd x(replicas), y(replicas);
  parallel_for(replicas, threads, [&](int r) {
    DecoupledEnsemble ens(config, r);
    Eigen::ArrayXd g(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t p = 0; p < grid.size(); ++p) {
      ens.advance_to(grid[p], model);
      g[static_cast<Eigen::Index>(p)] = ens.discrepancy();
    }
    acc.rows[static_cast<std::size_t>(r)] = std::move(g);
    x[r] = ens.ztilde()[0];
    y[r] = ens.ztilde()[1];
  });
  DecouplingResult out;
  out.grid = grid;
  out.replicas = replicas;
  acc.reduce(out.g_mean, out.g_stderr);
  out.sup_g = out.g_mean.size() ? out.g_mean.maxCoeff() : 0.0;
  const Eigen::ArrayXd dx = x - x.mean();
  const Eigen::ArrayXd dy = y - y.mean();
  const double sxy = (dx * dy).sum();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  out.ztilde_correlation = sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
  out.ztilde_correlation_stderr = 1.0 / std::sqrt(static_cast<double>(replicas));
  return out;
}

// ---------------------------------------------------------------------------
// Chaos scan

ChaosScanResult chaos_scan(const ChaosScanConfig& config, const CoefficientModel& model,
                           int threads) {
  if (config.n_list.empty()) throw InvalidConfig("chaos_scan needs a nonempty N list");
  require_event_time(config.sim);
  for (int n : config.n_list) {
    SimConfig sim = config.sim;
    sim.n_particles = n;
    sim.validate();
  }
  const auto& grid = config.sim.record_grid;
  const auto points = static_cast<Eigen::Index>(grid.size());
  const int replicas = config.sim.replicas;
  const std::size_t sizes = config.n_list.size();
  // [n index][replica]
  std::vector<SeriesAccumulator> w2(sizes), g(sizes), h(sizes);
  for (std::size_t s = 0; s < sizes; ++s) {
    w2[s].rows.resize(static_cast<std::size_t>(replicas));
    if (config.track_nonlinear) {
      g[s].rows.resize(static_cast<std::size_t>(replicas));
      h[s].rows.resize(static_cast<std::size_t>(replicas));
    }
  }

  parallel_for(replicas, threads, [&](int r) {
    ReferencePool pool = make_pool(config.sim, config.n_ref, r, false);
    std::vector<EmpiricalMeasured> snapshots;
    snapshots.reserve(grid.size());
    for (double t : grid) {
      pool.advance_to(t, model);
      snapshots.push_back(pool.measure());
    }
    for (std::size_t s = 0; s < sizes; ++s) {
      const int n = config.n_list[s];
      auto rng = RandomStream::child(config.sim.seed, static_cast<std::uint64_t>(r),
                                     lane::scan_base + s);
      Eigen::ArrayXd wealth = config.sim.initial.draw(n, rng);
      Eigen::ArrayXd row(points);
      double t = 0.0;
      Eigen::Index k = 0;
      while (k < points) {
        const Event e = draw_event(n, model, rng);
        const double next = t + e.wait;
        while (k < points && grid[static_cast<std::size_t>(k)] < next) {
          row[k] = w2_squared(EmpiricalMeasured(wealth), snapshots[static_cast<std::size_t>(k)]);
          ++k;
        }
        apply_trade(wealth, e.first, e.second, e.tuple);
        t = next;
      }
      w2[s].rows[static_cast<std::size_t>(r)] = std::move(row);

      if (config.track_nonlinear) {
        NonlinearConfig nc;
        nc.sim = config.sim;
        nc.sim.n_particles = n;
        nc.sim.seed = splitmix64(config.sim.seed + static_cast<std::uint64_t>(n));
        nc.n_ref = config.n_ref;
        NonlinearEnsemble ens(nc, r);
        Eigen::ArrayXd grow(points), hrow(points);
        for (Eigen::Index p = 0; p < points; ++p) {
          ens.advance_to(grid[static_cast<std::size_t>(p)], model);
          grow[p] = (ens.v() - ens.z()).square().mean();
          hrow[p] = w2_squared(EmpiricalMeasured(ens.z()), ens.pool().measure());
        }
        g[s].rows[static_cast<std::size_t>(r)] = std::move(grow);
        h[s].rows[static_cast<std::size_t>(r)] = std::move(hrow);
      }
    }
  });

  ChaosScanResult out;
  out.grid = grid;
  out.n_ref = config.n_ref;
  out.replicas = replicas;
  std::vector<double> log_n, log_sup;
  for (std::size_t s = 0; s < sizes; ++s) {
    ChaosSeries series;
    series.n = config.n_list[s];
    w2[s].reduce(series.w2_mean, series.w2_stderr);
    if (config.track_nonlinear) {
      g[s].reduce(series.g_mean, series.g_stderr);
      h[s].reduce(series.h_mean, series.h_stderr);
    }
    series.sup_w2 = points ? series.w2_mean.maxCoeff() : 0.0;
    if (series.sup_w2 > 0.0) {
      log_n.push_back(std::log(static_cast<double>(series.n)));
      log_sup.push_back(std::log(series.sup_w2));
    }
    out.series.push_back(std::move(series));
  }
  if (log_n.size() >= 2) {
    out.loglog_slope =
        least_squares(Eigen::Map<Eigen::ArrayXd>(log_n.data(), static_cast<Eigen::Index>(log_n.size())),
                      Eigen::Map<Eigen::ArrayXd>(log_sup.data(), static_cast<Eigen::Index>(log_sup.size())))
            .slope;
  } else {
    out.loglog_slope = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace kinex
