#include <Eigen/Core>
#include <cmath>
#include <set>

#include "doctest.h"
#include "kinex/random.hpp"
#include "kinex/stats.hpp"

using kinex::RandomStream;

TEST_CASE("streams are reproducible and separated") {
  RandomStream a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    (void)c();
  }
  CHECK(a == b);
  CHECK_FALSE(a == c);

  std::set<std::uint64_t> firsts;
  for (std::uint64_t index = 0; index < 50; ++index) {
    for (std::uint64_t lane = 0; lane < 4; ++lane) {
      auto s = RandomStream::child(7, index, lane);
      firsts.insert(s());
    }
  }
  CHECK(firsts.size() == 200);
  CHECK(RandomStream::child(7, 3, 1) == RandomStream::child(7, 3, 1));
}

TEST_CASE("uniform, exponential and bounded draws") {
  RandomStream rng(1);
  const int n = 400000;
  Eigen::ArrayXd u(n), e(n);
  for (int i = 0; i < n; ++i) {
    u[i] = rng.uniform();
    e[i] = rng.exponential(2.0);
  }
  CHECK(u.minCoeff() >= 0.0);
  CHECK(u.maxCoeff() < 1.0);
  const auto mu = kinex::mean_stderr(u);
  CHECK(std::abs(mu.mean - 0.5) < 4 * mu.stderr);
  const auto me = kinex::mean_stderr(e);
  CHECK(std::abs(me.mean - 0.5) < 4 * me.stderr);
  CHECK(e.minCoeff() >= 0.0);

  Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(7);
  for (int i = 0; i < 70000; ++i) {
    const auto k = rng.below(7);
    REQUIRE(k < 7);
    counts[static_cast<Eigen::Index>(k)] += 1;
  }
  CHECK(kinex::chi_square_sf(kinex::uniformity_chi_square(counts), 6) > 1e-4);
  CHECK(rng.below(1) == 0);
}
