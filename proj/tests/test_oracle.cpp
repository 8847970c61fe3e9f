#include <cmath>

#include "doctest.h"
#include "oracle/airy.hpp"

using oracle::airy_negative_asymptotic;
using oracle::airy_series;

TEST_CASE("airy series at the origin") {
  const auto a = airy_series(0.0);
  CHECK(a.ai == doctest::Approx(0.35502805388781723926).epsilon(1e-15));
  CHECK(a.aip == doctest::Approx(-0.25881940379280679840).epsilon(1e-15));
  CHECK(a.bi == doctest::Approx(0.61492662744600073515).epsilon(1e-15));
  CHECK(a.bip == doctest::Approx(0.44828835735382635791).epsilon(1e-15));
}

TEST_CASE("airy wronskian is 1/pi on both routes") {
  for (double z : {-9.5, -3.0, -1.0, 0.5, 2.0, 5.0}) {
    const auto a = airy_series(z);
    CHECK(a.ai * a.bip - a.aip * a.bi == doctest::Approx(1.0 / M_PI).epsilon(1e-13));
  }
  for (double x : {8.0, 20.0, 100.0, 1000.0}) {
    const auto a = airy_negative_asymptotic(x);
    CHECK(a.ai * a.bip - a.aip * a.bi == doctest::Approx(1.0 / M_PI).epsilon(1e-12));
  }
}

TEST_CASE("airy tabulated values") {
  const auto a = airy_series(-1.0);
  CHECK(a.ai == doctest::Approx(0.53556088329235211880).epsilon(1e-14));
  CHECK(a.bi == doctest::Approx(0.10399738949694461189).epsilon(1e-13));
  const auto b = airy_series(1.0);
  CHECK(b.ai == doctest::Approx(0.13529241631288141552).epsilon(1e-14));
  CHECK(b.bi == doctest::Approx(1.20742359495287126).epsilon(1e-14));
}

TEST_CASE("series and asymptotic expansion agree on [8, 10]") {
  double worst = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = 8.0 + 2.0 * i / 200.0;
    const auto s = airy_series(-x);
    const auto a = airy_negative_asymptotic(x);
    const double m = std::hypot(s.ai, s.bi), mp = std::hypot(s.aip, s.bip);
    worst = std::max({worst, std::abs(s.ai - a.ai) / m, std::abs(s.bi - a.bi) / m, std::abs(s.aip - a.aip) / mp,
                      std::abs(s.bip - a.bip) / mp});
  }
  MESSAGE("max relative disagreement " << worst);
  CHECK(worst < 1e-10);
}
