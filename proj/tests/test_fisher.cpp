#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "popbp/fisher.hpp"
#include "popbp/likelihood.hpp"
#include "popbp/pbp.hpp"

using namespace popbp;
using namespace popbp::fisher;
using doctest::Approx;

namespace {
const double kLn2 = std::log(2.0);

// Sum of dL^2 / L over a box of observation vectors, each term from the
// brute-force path sums.
double bruteforce_fisher(const ObservationSchedule& s, const ModelParams& m, int ymax, int cap) {
  double total = 0.0;
  std::vector<int> y(s.size(), 0);
  while (true) {
    const auto r = likelihood::likelihood_bruteforce(y, s, m, cap);
    if (r.value > 0) total += r.derivative * r.derivative / r.value;
    int i = 0;
    while (i < s.size() && ++y[i] > ymax) y[i++] = 0;
    if (i == s.size()) break;
  }
  return total;
}
}  // namespace

TEST_CASE("one observation") {
  ObservationSchedule s({1.0}, kLn2);
  const auto r = fisher_info(s, ModelParams(kLn2, 0.5));
  CHECK(r.terminated == Termination::Converged);
  CHECK(r.value == Approx(10.0 / 9.0).epsilon(1e-12));
  const auto first = fisher_info(s, ModelParams(kLn2, 0.5), {1, 2, 1});
  CHECK(first.terminated == Termination::SliceCap);
  CHECK(first.slices_used == 1);
  CHECK(first.value == Approx(4.0 / 27.0).epsilon(1e-14));

  ObservationSchedule s1({1.0}, 1.0);
  CHECK(fisher_info(s1, ModelParams(1.0, 0.3)).value ==
        Approx(0.70661477459229816).epsilon(1e-12));
}

TEST_CASE("fallbacks at the ends of the p range") {
  ObservationSchedule s({1.0}, kLn2);
  const auto full = fisher_info(s, ModelParams(kLn2, 1.0));
  CHECK(full.value == Approx(2.0).epsilon(1e-14));
  CHECK(full.slices_used == 0);
  CHECK(fisher_info(s, ModelParams(kLn2, 0.0)).value == 0.0);
  ObservationSchedule tied({0.5, 0.5, 1.0}, 1.0);
  CHECK(fisher_info(tied, ModelParams(1.0, 1.0)).value ==
        Approx(pbp::fisher_info(1, std::vector<double>{0.5, 1.0}, 1.0)).epsilon(1e-15));
}

TEST_CASE("agrees with brute-force sums") {
  const std::vector<std::vector<double>> schedules{{1.0}, {0.5, 1.0}};
  for (const auto& t : schedules) {
    for (double lambda : {0.5, 1.0}) {
      for (double p : {0.3, 0.7}) {
        ObservationSchedule s(t, lambda);
        ModelParams m(lambda, p);
        const int ymax = t.size() == 1 ? 200 : 45;
        const double bf = bruteforce_fisher(s, m, ymax, 110);
        CHECK(fisher_info(s, m).value == Approx(bf).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("continuity towards full detection") {
  for (double lambda : {0.3, 0.7, 1.0}) {
    ObservationSchedule s({0.5, 1.0}, lambda);
    const double near = fisher_info(s, ModelParams(lambda, 1.0 - 1e-3)).value;
    const double full = pbp::fisher_info(1, s.times(), lambda);
    CHECK(std::abs(near / full - 1.0) < 0.01);
  }
}

TEST_CASE("rescaling identity") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 6; ++k) {
    std::vector<double> t{0.1 + 0.8 * unit(rng), 1.0};
    if (t[0] > 1.0) t[0] = 1.0;
    const double lambda = 0.2 + 1.5 * unit(rng);
    const double p = 0.1 + 0.85 * unit(rng);
    const double tau = 0.3 + 3.0 * unit(rng);
    std::vector<double> scaled{tau * t[0], tau};
    const double unit_fi = fisher_info(ObservationSchedule(t, lambda), ModelParams(lambda, p)).value;
    const double scaled_fi =
        fisher_info(ObservationSchedule(scaled, lambda / tau), ModelParams(lambda / tau, p, 1, tau))
            .value;
    CHECK(tau * tau * unit_fi == Approx(scaled_fi).epsilon(1e-10));
  }
}

TEST_CASE("bitwise identical across worker counts") {
  ObservationSchedule s({0.3, 0.7, 1.0}, 1.0);
  ModelParams m(1.0, 0.5);
  const auto one = fisher_info(s, m, {100000, 2, 1});
  for (int w : {2, 3, 8}) {
    const auto other = fisher_info(s, m, {100000, 2, w});
    CHECK(other.value == one.value);
    CHECK(other.slices_used == one.slices_used);
  }
}

TEST_CASE("termination needs consecutive unchanged slices") {
  ObservationSchedule s({0.5, 1.0}, 1.0);
  ModelParams m(1.0, 0.5);
  const auto two = fisher_info(s, m, {100000, 2, 1});
  const auto five = fisher_info(s, m, {100000, 5, 1});
  CHECK(two.terminated == Termination::Converged);
  CHECK(five.slices_used >= two.slices_used + 3);
  CHECK(five.value == two.value);
  CHECK_THROWS_AS(fisher_info(s, m, {0, 2, 1}), std::invalid_argument);
}

TEST_CASE("extended precision agrees with double") {
  ObservationSchedule s({0.4, 1.0}, 2.0);
  ModelParams m(2.0, 0.6);
  const double d = fisher_info<double>(s, m).value;
  const double ld = fisher_info<long double>(s, m).value;
  CHECK(ld == Approx(d).epsilon(1e-12));
}

TEST_CASE("two-observation approximation") {
  SUBCASE("equals the closed form at full detection") {
    for (double lambda : {0.5, 1.0, 5.0}) {
      for (double t1 : {0.1, 0.5, 0.9}) {
        const double a = fisher_info_approx_n2(t1, 1.0, lambda, 1.0);
        const double e = pbp::fisher_info(1, std::vector<double>{t1, 1.0}, lambda);
        CHECK(std::abs(a - e) <= 1e-12 * e);
      }
    }
  }
  SUBCASE("removable singularities") {
    for (double p : {0.2, 0.9, 1.0}) {
      const double tied = fisher_info_approx_n2(1.0, 1.0, 1.0, p);
      CHECK(std::isfinite(tied));
      CHECK(fisher_info_approx_n2(1.0 - 1e-10, 1.0, 1.0, p) == Approx(tied).epsilon(1e-8));
      CHECK(fisher_info_approx_n2(1.0 - 1e-5, 1.0, 1.0, p) == Approx(tied).epsilon(1e-4));
      const double start = fisher_info_approx_n2(0.0, 1.0, 1.0, p);
      CHECK(std::isfinite(start));
      CHECK(fisher_info_approx_n2(1e-10, 1.0, 1.0, p) == Approx(start).epsilon(1e-8));
      CHECK(fisher_info_approx_n2(0.0, 0.0, 1.0, p) == 0.0);
      const double tiny = fisher_info_approx_n2(0.0, 5e-10, 1.0, p);
      CHECK(std::isfinite(tiny));
      CHECK(tiny >= 0.0);
      CHECK(tiny < 1e-8);
      CHECK(std::isfinite(fisher_info_approx_n2(2e-10, 5e-10, 1.0, p)));
    }
  }
  SUBCASE("tracks the exact value") {
    ObservationSchedule s({0.5, 1.0}, 1.0);
    const double exact = fisher_info(s, ModelParams(1.0, 0.5)).value;
    CHECK(fisher_info_approx_n2(0.5, 1.0, 1.0, 0.5) == Approx(exact).epsilon(0.02));
  }
  SUBCASE("input checks") {
    CHECK_THROWS_AS(fisher_info_approx_n2(0.5, 1.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fisher_info_approx_n2(0.7, 0.5, 1.0, 0.5), std::invalid_argument);
  }
}
