#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "kinex/coefficients.hpp"
#include "kinex/errors.hpp"
#include "kinex/stats.hpp"
#include "support/models.hpp"

using namespace kinex;

namespace {

std::vector<CoefficientModel> catalog() {
  return {CoefficientModel::deterministic({0.5, 0.5, 0.5, 0.5}),
          CoefficientModel::winner_takes_all(),
          CoefficientModel::iid_uniform(),
          CoefficientModel::complement_uniform(),
          CoefficientModel::random_sharing(),
          CoefficientModel::saving_propensity(0.3)};
}

}  // namespace

TEST_CASE("sample_tuple examples") {
  RandomStream rng(3);
  CHECK(sample_tuple(CoefficientModel::winner_takes_all(), rng) == TradeTuple{1, 1, 0, 0});
  CHECK(sample_tuple(CoefficientModel::deterministic({1, 0, 1, 0}), rng) == TradeTuple{1, 0, 1, 0});

  const auto iid = CoefficientModel::iid_uniform();
  const int n = 1000000;
  Eigen::ArrayXXd draws(n, 4);
  for (int i = 0; i < n; ++i) {
    const auto t = iid.sample(rng);
    draws.row(i) << t.l, t.r, t.lt, t.rt;
  }
  CHECK(draws.minCoeff() >= 0.0);
  CHECK(draws.maxCoeff() <= 1.0);
  const double sigma = std::sqrt(1.0 / 12.0 / n);
  for (int c = 0; c < 4; ++c) CHECK(std::abs(draws.col(c).mean() - 0.5) < 3 * sigma);

  const auto rs = CoefficientModel::random_sharing();
  for (int i = 0; i < 1000; ++i) {
    const auto t = rs.sample(rng);
    CHECK(t.l == t.r);
    CHECK(t.lt == t.rt);
    CHECK(t.l + t.lt == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("mixed_moment examples") {
  CHECK(mixed_moment(CoefficientModel::iid_uniform(), MomentFunctional::power_sum(2)).value ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(mixed_moment(CoefficientModel::winner_takes_all(),
                     MomentFunctional::of(Functional::direct_product))
            .value == 1.0);
  const auto id = CoefficientModel::deterministic({1, 0, 1, 0});
  CHECK(mixed_moment(id, MomentFunctional::of(Functional::left_squares)).value == 2.0);
  CHECK(mixed_moment(id, MomentFunctional::power_sum(3.7)).value == 2.0);
  CHECK(mixed_moment(id, MomentFunctional::power_sum(3.7)).exact);
}

TEST_CASE("closed forms agree with Monte Carlo estimates") {
  RandomStream rng(11);
  MonteCarloOptions opts;
  opts.samples = 400000;
  for (const auto& model : catalog()) {
    for (const auto& phi : {MomentFunctional::power_sum(0.5), MomentFunctional::power_sum(2.7),
                            MomentFunctional::mixed_power(1.5),
                            MomentFunctional::of(Functional::cross_product),
                            MomentFunctional::of(Functional::same_side_product),
                            MomentFunctional::growth_factor(5, 0.5)}) {
      const double exact = model.expectation(phi);
      const auto est = estimate_moment(model, phi, rng, opts);
      CHECK(std::abs(est.value - exact) <= 4 * est.stderr + 1e-12);
    }
  }
  const auto mc = mixed_moment(CoefficientModel::iid_uniform().with_closed_form(false),
                               MomentFunctional::power_sum(2), opts);
  CHECK_FALSE(mc.exact);
  CHECK(std::abs(mc.value - 4.0 / 3.0) <= 4 * mc.stderr);
}

TEST_CASE("Monte Carlo refuses unstable estimates") {
  RandomStream rng(5);
  MonteCarloOptions opts;
  opts.samples = 100;
  opts.batches = 10;
  CHECK_THROWS_AS(estimate_moment(CoefficientModel::iid_uniform(), MomentFunctional::power_sum(60), rng, opts),
                  NonIntegrable);
}

TEST_CASE("Pareto index") {
  CHECK(pareto_index(CoefficientModel::iid_uniform()).infinite);
  CHECK(pareto_index(CoefficientModel::random_sharing()).infinite);
  const auto id = pareto_index(CoefficientModel::deterministic({1, 0, 1, 0}));
  CHECK(id.degenerate);
  CHECK(id.value == 1.0);
  CHECK_FALSE(id.infinite);

  const auto table = CoefficientModel::empirical_table(
      {{{0.2, 0.2, 0.2, 0.2}, 0.5}, {{1.4, 0.2, 1.4, 0.2}, 0.5}});
  const auto alpha = pareto_index(table);
  CHECK_FALSE(alpha.infinite);
  CHECK(alpha.value == doctest::Approx(1.8056536925903639).epsilon(1e-8));
  // sign consistency around alpha
  for (double p : {1.2, 1.5, 1.8}) {
    CHECK(mixed_moment(table, MomentFunctional::power_sum(p)).value < 2.0);
  }
  for (double p : {1.82, 2.5, 4.0}) {
    CHECK(mixed_moment(table, MomentFunctional::power_sum(p)).value >= 2.0);
  }
}

TEST_CASE("second-order constants of the catalog") {
  struct Row {
    CoefficientModel model;
    double a, b, c, d;
  };
  const std::vector<Row> rows = {
      {CoefficientModel::iid_uniform(), 1.0 / 3, 1.0 / 2, 1.0 / 2, 1.0 / 2},
      {CoefficientModel::complement_uniform(), 1.0 / 3, 1.0 / 2, 1.0 / 2, 2.0 / 3},
      {CoefficientModel::random_sharing(), 1.0 / 3, 2.0 / 3, 1.0 / 3, 2.0 / 3},
      {CoefficientModel::saving_propensity(0.5), 1.0 / 3, 5.0 / 12, 1.0 / 3, 5.0 / 12},
      {CoefficientModel::saving_propensity(0.3), 28.0 / 75, 161.0 / 300, 28.0 / 75, 161.0 / 300},
      {CoefficientModel::winner_takes_all(), 0.0, 1.0, 0.0, 1.0},
  };
  for (const auto& row : rows) {
    const auto d = diagnostics(row.model, 10, 2.0);
    CHECK(d.a == doctest::Approx(row.a).epsilon(1e-13));
    CHECK(d.b == doctest::Approx(row.b).epsilon(1e-13));
    CHECK(d.c == doctest::Approx(row.c).epsilon(1e-13));
    CHECK(d.d == doctest::Approx(row.d).epsilon(1e-13));
  }
  const auto iid = diagnostics(CoefficientModel::iid_uniform(), 10, 2.0);
  CHECK(iid.a * iid.d < iid.b * iid.c);
  CHECK_FALSE(iid.product_identity());
  CHECK(diagnostics(CoefficientModel::random_sharing(), 10, 2.0).product_identity());
}

TEST_CASE("order-p constants") {
  const auto sp = CoefficientModel::saving_propensity(0.3);
  struct Row {
    double p, power_sum, a_p, b_p;
  };
  for (const auto& row : {Row{0.5, 2.7073242882329587, -0.35366214411647934, 1.1901547087495701},
                          Row{1.5, 1.5550495803728359, 0.22247520981358204, 0.99856227708672562},
                          Row{2.0, 1.2533333333333334, 0.37333333333333329, 1.0733333333333335},
                          Row{2.7, 0.96956939328124747, 0.51521530335937626, 1.2762042772837101},
                          Row{3.0, 0.88, 0.56, 1.4}}) {
    CHECK(mixed_moment(sp, MomentFunctional::power_sum(row.p)).value ==
          doctest::Approx(row.power_sum).epsilon(1e-11));
    const auto d = diagnostics(sp, 10, row.p);
    CHECK(d.a_p == doctest::Approx(row.a_p).epsilon(1e-11));
    CHECK(d.b_p == doctest::Approx(row.b_p).epsilon(1e-11));
  }
  const auto rs2 = diagnostics(CoefficientModel::random_sharing(), 10, 2.0);
  CHECK(rs2.a_p == doctest::Approx(1.0 / 3).epsilon(1e-13));
  CHECK(rs2.b_p == doctest::Approx(4.0 / 3).epsilon(1e-13));
  const auto rs3 = diagnostics(CoefficientModel::random_sharing(), 10, 3.0);
  CHECK(rs3.a_p == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(rs3.b_p == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("beta and gamma") {
  const auto iid = CoefficientModel::iid_uniform();
  struct Row {
    int n;
    double p, beta, gamma;
  };
  for (const auto& row : {Row{50, 2.0, 1.0 + 1.0 / 7500.0, -1.0 / 300.0},
                          Row{50, 0.5, 0.99998333145780149, 0.00041671355496264439},
                          Row{10, 3.0, 1.01, -0.05},
                          Row{2, 0.5, 0.98866296739710102, 0.011337032602898978},
                          Row{3, 1.5, 1.01397985186481, -0.020969777797214983}}) {
    const auto d = diagnostics(iid, row.n, row.p);
    CHECK(d.beta == doctest::Approx(row.beta).epsilon(1e-12));
    CHECK(d.gamma == doctest::Approx(row.gamma).epsilon(1e-8));
  }
  const auto p1 = diagnostics(iid, 20, 1.0);
  CHECK(p1.beta == 1.0);
  CHECK(p1.gamma == 0.0);
  // weak conservation makes S = 2 and gamma = 0
  CHECK(diagnostics(CoefficientModel::complement_uniform(), 20, 2.0).gamma == 0.0);
}

TEST_CASE("beta and gamma signs and 1/N scaling") {
  for (const auto& model : catalog()) {
    for (double p : {0.3, 0.5, 0.9, 1.5, 2.0, 3.0}) {
      double worst = 0.0;
      for (int n : {10, 100, 1000, 10000}) {
        const auto d = diagnostics(model, n, p);
        if (p < 1.0) {
          CHECK(d.beta <= 1.0 + 1e-15);
          CHECK(d.gamma >= -1e-12);
        } else {
          CHECK(d.beta >= 1.0 - 1e-15);
          CHECK(d.gamma <= 1e-12);
        }
        worst = std::max(worst, std::abs(d.gamma) * n);
      }
      CHECK(worst < 10.0);
    }
  }
}

TEST_CASE("condition flags") {
  const auto rs = check_conditions(CoefficientModel::random_sharing());
  CHECK(rs.strict_conservation);
  CHECK(rs.nondegenerate);
  const auto wta = check_conditions(CoefficientModel::winner_takes_all());
  CHECK(wta.strict_conservation);
  CHECK_FALSE(wta.nondegenerate);
  const auto iid = check_conditions(CoefficientModel::iid_uniform());
  CHECK_FALSE(iid.weak_conservation);
  CHECK(iid.mean_conservation);
  const auto cu = check_conditions(CoefficientModel::complement_uniform());
  CHECK(cu.weak_conservation);
  CHECK_FALSE(cu.strict_conservation);
  CHECK_FALSE(cu.pairwise_conservation);

  RandomStream rng(9);
  for (const auto& model : catalog()) {
    const auto analytic = check_conditions(model);
    const auto sampled = check_conditions(model, rng, 20000, 1e-9, CheckMode::sampling);
    CHECK(analytic == sampled);
  }
}

TEST_CASE("invalid models are rejected") {
  CHECK_THROWS_AS(CoefficientModel::deterministic({-0.1, 1.1, 0.5, 0.5}), InvalidModel);
  CHECK_THROWS_AS(CoefficientModel::deterministic({1, 1, 1, 1}), InvalidModel);
  CHECK_THROWS_AS(CoefficientModel::empirical_table({}), InvalidModel);
  CHECK_THROWS_AS(CoefficientModel::saving_propensity(1.0), InvalidModel);
}

TEST_CASE("constant inequalities hold on random tables") {
  RandomStream rng(2024);
  for (int k = 0; k < 20; ++k) {
    const auto model = testing::random_table(rng);
    const auto d = diagnostics(model, 10, 2.0);
    CHECK(d.a <= d.b + 1e-12);
    CHECK(d.a <= d.c + 1e-12);
    CHECK(d.a <= d.d + 1e-12);
    CHECK(d.a + d.d <= d.b + d.c + 1e-12);
    if (d.a >= 0) CHECK(d.a * d.d <= d.b * d.c + 1e-12);
  }
}
