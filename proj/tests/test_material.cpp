#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "mqs/material.hpp"

using namespace mqs;

TEST_CASE("brauer reluctivity at zero is k1 + k3") {
  const auto curve = BHCurve::brauer(3.8, 2.17, 396.2);
  CHECK(curve.reluctivity(0.0) == doctest::Approx(400.0).epsilon(1e-14));
}

TEST_CASE("table reluctivity is H/B on a knot") {
  const auto curve = BHCurve::from_table({{0, 0}, {1, 500}, {2, 2000}});
  CHECK(curve.reluctivity(1.0) == doctest::Approx(500.0).epsilon(1e-14));
  CHECK(curve.reluctivity(2.0) == doctest::Approx(1000.0).epsilon(1e-14));
  // interior: linear interpolation of H
  CHECK(curve.field_strength(1.5) == doctest::Approx(1250.0).epsilon(1e-14));
  // beyond the last knot: slope 1/mu0
  CHECK(curve.field_strength(2.5) == doctest::Approx(2000.0 + 0.5 * vacuum_reluctivity).epsilon(1e-14));
  // at zero: slope of the first segment
  CHECK(curve.reluctivity(0.0) == doctest::Approx(500.0).epsilon(1e-14));
}

TEST_CASE("brauer formula value checked against a high-precision evaluation") {
  const auto curve = BHCurve::brauer(3.8, 2.17, 396.2);
  const long double want = 3.8L * std::exp(2.17L * 1.5L * 1.5L) + 396.2L;
  CHECK(curve.reluctivity(1.5) == doctest::Approx(static_cast<double>(want)).epsilon(1e-14));
}

TEST_CASE("negative flux density magnitude is rejected") {
  const auto curve = BHCurve::brauer(3.8, 2.17, 396.2);
  CHECK_THROWS_AS(curve.reluctivity(-0.1), std::invalid_argument);
}

TEST_CASE("reluctivity never exceeds the vacuum value") {
  const auto curve = BHCurve::brauer(3.8, 2.17, 396.2);
  for (int i = 0; i <= 300; ++i) {
    const double b = 3.0 * i / 300;
    CHECK(curve.reluctivity(b) <= vacuum_reluctivity * (1 + 1e-12));
  }
}

TEST_CASE("saturation check accepts the default model") {
  const auto report = BHCurve::brauer(3.8, 2.17, 396.2).saturation_check();
  CHECK(report.ok());
}

TEST_CASE("saturation check flags a decreasing H table with the offending interval") {
  const auto curve = BHCurve::from_table({{0, 0}, {1, 500}, {2, 400}});
  const auto report = curve.saturation_check(2.0, 100);
  REQUIRE(!report.ok());
  bool found = false;
  for (const auto& v : report.violations)
    if (v.what.find("not increasing") != std::string::npos && v.b_lo >= 0.9 && v.b_hi <= 2.01) found = true;
  CHECK(found);
}

TEST_CASE("saturation check flags an initial slope above the vacuum reluctivity") {
  const auto curve = BHCurve::from_table({{0, 0}, {0.5, 1e6}, {1.0, 2e6}});
  const auto report = curve.saturation_check(1.0, 100);
  REQUIRE(!report.ok());
  bool found = false;
  for (const auto& v : report.violations)
    if (v.what.find("vacuum") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("linear curves are state independent, nonlinear ones are not") {
  CHECK(!BHCurve::linear(400.0).state_dependent());
  CHECK(BHCurve::brauer(3.8, 2.17, 396.2).state_dependent());
  CHECK(BHCurve::from_table({{0, 0}, {1, 500}}).state_dependent());
  CHECK_THROWS_AS(BHCurve::linear(2.0 * vacuum_reluctivity), std::invalid_argument);
  CHECK_THROWS_AS(BHCurve::linear(-1.0), std::invalid_argument);
}

TEST_CASE("table files parse with comments and report bad lines") {
  const char* path = "bh_table_test.txt";
  {
    std::ofstream out(path);
    out << "# steel sample\n";
    out << "0 0\n";
    out << "1.0 500  # knee\n";
    out << "2.0 2000\n";
  }
  const auto curve = BHCurve::from_file(path);
  CHECK(curve.reluctivity(1.0) == doctest::Approx(500.0));
  {
    std::ofstream out(path);
    out << "0 0\n";
    out << "1.0\n";  // missing column
  }
  CHECK_THROWS_WITH_AS(BHCurve::from_file(path), doctest::Contains(":2"), std::runtime_error);
  std::remove(path);
}

TEST_CASE("table construction rejects non-increasing B") {
  CHECK_THROWS_AS(BHCurve::from_table({{0, 0}, {1, 500}, {1, 600}}), std::invalid_argument);
  CHECK_THROWS_AS(BHCurve::from_table({{0, 5}, {1, 500}}), std::invalid_argument);
}

TEST_CASE("reluctivity is continuous across the brauer clamp") {
  const double k1 = 3.8, k2 = 2.17, k3 = 396.2;
  const auto curve = BHCurve::brauer(k1, k2, k3);
  // the raw exponential crosses the vacuum reluctivity at b_star
  const double b_star = std::sqrt(std::log((vacuum_reluctivity - k3) / k1) / k2);
  const double below = curve.reluctivity(b_star - 1e-9);
  const double above = curve.reluctivity(b_star + 1e-9);
  CHECK(std::abs(below - above) <= 1e-4 * vacuum_reluctivity);
  CHECK(above == doctest::Approx(vacuum_reluctivity).epsilon(1e-12));
  // H keeps increasing through the crossover
  double prev = curve.field_strength(2.0);
  for (int i = 1; i <= 200; ++i) {
    const double b = 2.0 + 0.8 * i / 200;
    const double h = curve.field_strength(b);
    CHECK(h > prev);
    prev = h;
  }
}
