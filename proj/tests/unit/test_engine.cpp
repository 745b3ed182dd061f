#include <Eigen/Core>
#include <cmath>

#include "doctest.h"
#include "kinex/engine.hpp"
#include "kinex/errors.hpp"
#include "kinex/stats.hpp"

using namespace kinex;

namespace {

SimConfig base_config(int n, double t_end, int replicas) {
  SimConfig c;
  c.n_particles = n;
  c.t_end = t_end;
  c.replicas = replicas;
  c.seed = 99;
  return c;
}

}  // namespace

TEST_CASE("initial conditions") {
  auto c = base_config(4, 1.0, 1);
  const auto s = init_state(c, 0);
  CHECK((s.wealth == 1.0).all());
  CHECK(s.t == 0.0);
  CHECK(s.jumps == 0);

  c.n_particles = 10000;
  c.initial.kind = InitialKind::two_point;
  const auto tp = init_state(c, 0);
  CHECK(std::abs(tp.mean() - 1.0) < 0.05);
  CHECK(((tp.wealth == 0.0) || (tp.wealth == 2.0)).all());

  c.n_particles = 1000000;
  c.initial.kind = InitialKind::exponential_m;
  const auto ex = init_state(c, 0);
  const double var = (ex.wealth - ex.mean()).square().mean();
  CHECK(std::abs(var - 1.0) < 0.01);

  c.n_particles = 5;
  c.initial.kind = InitialKind::from_file;
  c.initial.values = {1, 2, 3, 4, 5};
  c.initial.m = 3;
  const auto ff = init_state(c, 0);
  Eigen::ArrayXd sorted = ff.wealth;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  CHECK((sorted == Eigen::ArrayXd::LinSpaced(5, 1, 5)).all());

  CHECK_THROWS_AS(init_state(c, 1), InvalidConfig);
  c.initial.values = {1, 2};
  CHECK_THROWS_AS(init_state(c, 0), InvalidConfig);
  c.initial.kind = InitialKind::two_point;
  c.initial.atoms = {0, 3};
  c.initial.m = 1;
  CHECK_THROWS_AS(init_state(c, 0), InvalidConfig);
}

TEST_CASE("config validation") {
  auto c = base_config(1, 1.0, 1);
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  c = base_config(3, 1.0, 1);
  c.record_grid = {0.5, 0.2};
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  c.record_grid = {0.5, 2.0};
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  c.record_grid = {};
  c.n_jumps = 4;
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  c.time_mode = TimeMode::jump_count;
  c.t_end = 0;
  c.record_grid = {1.5};
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  c.record_grid = {1, 4};
  CHECK_NOTHROW(c.validate());
  c.moments_p = {-1};
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
}

TEST_CASE("trade arithmetic") {
  Eigen::ArrayXd w(2);
  w << 3, 5;
  apply_trade(w, 0, 1, {1, 1, 0, 0});
  CHECK(w[0] == 8.0);
  CHECK(w[1] == 0.0);

  w << 4, 0;
  apply_trade(w, 0, 1, {0.25, 0.25, 0.75, 0.75});
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 3.0);

  auto c = base_config(6, 1.0, 1);
  c.initial.kind = InitialKind::exponential_m;
  auto s = init_state(c, 0);
  const Eigen::ArrayXd before = s.wealth;
  for (int k = 0; k < 100; ++k) step(s, CoefficientModel::deterministic({1, 0, 1, 0}));
  CHECK((s.wealth == before).all());
  CHECK(s.jumps == 100);
  CHECK(s.t > 0.0);
}

TEST_CASE("ordered pairs are uniform") {
  RandomStream rng(4);
  const int n = 4;
  Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(n * n);
  for (int k = 0; k < 120000; ++k) {
    const auto [i, j] = draw_pair(n, rng);
    REQUIRE(i != j);
    counts[i * n + j] += 1;
  }
  Eigen::ArrayXd off(n * (n - 1));
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) off[idx++] = counts[i * n + j];
    }
  }
  CHECK(chi_square_sf(uniformity_chi_square(off), n * (n - 1) - 1) > 1e-4);
  for (int k = 0; k < 100; ++k) {
    const auto [i, j] = draw_pair(2, rng);
    CHECK(i + j == 1);
  }
}

TEST_CASE("rescaled view") {
  ParticleState s;
  s.wealth.resize(3);
  s.wealth << 2, 4, 6;
  const auto r = rescaled_view(s);
  CHECK(r[0] == 0.5);
  CHECK(r[1] == 1.0);
  CHECK(r[2] == 1.5);
  s.wealth.setZero();
  CHECK_THROWS_AS(rescaled_view(s), ZeroMean);
}

TEST_CASE("simulation is reproducible and thread-count independent") {
  auto c = base_config(20, 5.0, 16);
  c.initial.kind = InitialKind::exponential_m;
  c.record_grid = {0, 1, 2.5, 5};
  c.moments_p = {0.5, 2};
  c.record_rescaled = true;
  const auto model = CoefficientModel::iid_uniform();
  const auto a = simulate(c, model, 1);
  const auto b = simulate(c, model, 4);
  REQUIRE(a.stats.size() == b.stats.size());
  for (std::size_t k = 0; k < a.stats.size(); ++k) {
    CHECK((a.stats[k].mean == b.stats[k].mean).all());
    CHECK((a.stats[k].stderr == b.stats[k].stderr).all());
  }
  // first moment column equals the empirical mean
  CHECK((a.get(Stat::moment, 0.5).mean.size() == 4));
  CHECK_THROWS_AS(a.get(Stat::moment, 3.0), InvalidConfig);
}

TEST_CASE("jump-count mode is the embedded chain") {
  auto ev = base_config(10, 3.0, 1);
  ev.initial.kind = InitialKind::uniform_0_2m;
  const auto model = CoefficientModel::saving_propensity(0.3);
  auto s = init_state(ev, 0);
  for (int k = 0; k < 37; ++k) step(s, model, TimeMode::event_time);

  SimConfig jc = ev;
  jc.time_mode = TimeMode::jump_count;
  jc.t_end = 0;
  jc.n_jumps = 37;
  const auto run = simulate_replica(jc, model, 0);
  CHECK((run.final_state.wealth == s.wealth).all());
  CHECK(run.final_state.jumps == 37);
}

TEST_CASE("recording is piecewise constant between jumps") {
  auto c = base_config(5, 2.0, 1);
  c.initial.kind = InitialKind::exponential_m;
  c.record_grid = {0.0, 0.7, 2.0};
  const auto model = CoefficientModel::random_sharing();
  const auto run = simulate_replica(c, model, 0);

  auto s = init_state(c, 0);
  std::vector<Eigen::ArrayXd> expected;
  const auto layout = observable_layout(c);
  std::size_t k = 0;
  while (k < c.record_grid.size()) {
    auto copy = s;
    const Event e = draw_event(5, model, copy.rng);
    const double next = s.t + e.wait;
    while (k < c.record_grid.size() && c.record_grid[k] < next) {
      expected.push_back(observe(s.wealth, layout));
      ++k;
    }
    step(s, model);
  }
  for (std::size_t g = 0; g < expected.size(); ++g) {
    CHECK((run.values.row(static_cast<Eigen::Index>(g)).transpose().array() == expected[g]).all());
  }
  CHECK(run.final_state.t <= 2.0);
}

TEST_CASE("strictly conservative runs conserve total wealth") {
  auto c = base_config(50, 0, 1);
  c.time_mode = TimeMode::jump_count;
  c.n_jumps = 200000;
  c.initial.kind = InitialKind::exponential_m;
  const auto run = simulate_replica(c, CoefficientModel::random_sharing(), 0);
  const double total0 = init_state(c, 0).total();
  CHECK(std::abs(run.final_state.total() - total0) <= 1e-9 * total0);
  CHECK((run.final_state.wealth >= 0.0).all());
}

TEST_CASE("empirical mean is a martingale and coordinates are exchangeable") {
  auto c = base_config(10, 4.0, 3000);
  c.initial.kind = InitialKind::exponential_m;
  c.record_grid = {4.0};
  c.moments_p = {2};
  const auto model = CoefficientModel::iid_uniform();
  const auto runs = simulate_replicas(c, model, 1);
  const auto series = aggregate(c, runs);
  const auto& mean = series.get(Stat::mean);
  CHECK(std::abs(mean.mean[0] - 1.0) <= 4 * mean.stderr[0]);

  Eigen::ArrayXd first(c.replicas), last(c.replicas);
  for (int r = 0; r < c.replicas; ++r) {
    first[r] = runs[static_cast<std::size_t>(r)].final_state.wealth[0];
    last[r] = runs[static_cast<std::size_t>(r)].final_state.wealth[9];
  }
  const auto a = mean_stderr(first);
  const auto b = mean_stderr(last);
  CHECK(std::abs(a.mean - b.mean) <= 4 * std::hypot(a.stderr, b.stderr));
}
