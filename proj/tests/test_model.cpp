#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "popbp/model.hpp"

using namespace popbp;

TEST_CASE("ModelParams validates its fields") {
  ModelParams m(1.5, 0.25, 3, 2.0);
  CHECK(m.lambda() == 1.5);
  CHECK(m.q() == 0.75);
  CHECK(m.x0() == 3);
  CHECK(m.tau() == 2.0);
  CHECK(m.with_p(0.5).q() == 0.5);
  CHECK_THROWS_AS(ModelParams(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(-1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(1.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(1.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(1.0, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(1.0, 0.5, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(NAN, 0.5), std::invalid_argument);
}

TEST_CASE("decay factors") {
  const std::vector<double> t{0.5, 1.0};
  const auto v = decay_factors(t, 1.0);
  CHECK(v[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(0.606531).epsilon(1e-6));

  const std::vector<double> tied{1.0, 1.0};
  CHECK(decay_factors(tied, 3.0)[1] == 1.0);

  const std::vector<double> one{1.0};
  CHECK(decay_factors(one, 1e-12)[0] == doctest::Approx(1.0).epsilon(1e-11));

  const std::vector<double> decreasing{0.7, 0.3};
  CHECK_THROWS_AS(decay_factors(decreasing, 1.0), std::invalid_argument);
  const std::vector<double> negative{-0.1, 1.0};
  CHECK_THROWS_AS(decay_factors(negative, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(decay_factors(t, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(decay_factors(std::vector<double>{}, 1.0), std::invalid_argument);
}

TEST_CASE("decay factors shrink as gaps grow") {
  double prev = 1.0;
  for (double g = 0.05; g <= 2.0; g += 0.05) {
    const std::vector<double> t{g};
    const double v = decay_factors(t, 0.7)[0];
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("schedule exposes gaps with an implicit zero start") {
  ObservationSchedule s({0.25, 0.25, 1.0}, 2.0);
  CHECK(s.size() == 3);
  CHECK(s.gap(0) == 0.25);
  CHECK(s.gap(1) == 0.0);
  CHECK(s.gap(2) == 0.75);
  CHECK(s.upsilon()[1] == 1.0);
  CHECK(s.horizon() == 1.0);
}

TEST_CASE("rescale_design") {
  const std::vector<double> t{0.54, 1.0};
  const auto r = rescale_design(t, 3.0);
  CHECK(r[0] == doctest::Approx(1.62).epsilon(1e-15));
  CHECK(r[1] == 3.0);
  CHECK(rescale_design(t, 1.0) == t);
  CHECK_THROWS_AS(rescale_design(t, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rescale_design(t, -2.0), std::invalid_argument);
}
