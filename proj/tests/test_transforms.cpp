#include <cmath>

#include "doctest.h"
#include "oracle/airy.hpp"
#include "starklab/constants.hpp"
#include "starklab/errors.hpp"
#include "starklab/transforms.hpp"

using namespace starklab;

TEST_CASE("coordinate maps") {
  CHECK(xi_of_x(0.0) == 0.0);
  CHECK(x_of_xi(0.0) == 0.0);
  CHECK(xi_of_x(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(std::abs(x_of_xi(xi_of_x(7.3)) - 7.3) < 1e-12);
  CHECK(x_of_xi(1.0) == doctest::Approx(kLiouvilleC).epsilon(1e-15));
  // c = (3/2)^{2/3}
  CHECK(kLiouvilleC == doctest::Approx(std::cbrt(2.25)).epsilon(1e-15));
  const auto p = liouville_from_x(16.0);
  CHECK(p.xi == doctest::Approx(128.0 / 3.0));
  CHECK_THROWS_AS(xi_of_x(-1.0), DomainError);
  CHECK_THROWS_AS(x_of_xi(-1.0), DomainError);
}

TEST_CASE("amplitude maps") {
  CHECK(phi_of_u(1.0, 1.0) == 1.0);
  CHECK(phi_of_u(16.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(u_of_phi(100.0, phi_of_u(x_of_xi(100.0), 0.37)) == doctest::Approx(0.37).epsilon(1e-12));
  for (double xi : {1.0, 100.0, 12345.0}) {
    const double x = x_of_xi(xi);
    const auto [p, dp] = phi_state_of_u(x, 0.3, -1.7);
    const auto [u, du] = u_state_of_phi(xi, p, dp);
    CHECK(u == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(du == doctest::Approx(-1.7).epsilon(1e-12));
  }
}

TEST_CASE("effective potential") {
  CHECK(effective_potential(ZeroPotential{}, 1.0, 0.0) == doctest::Approx(-5.0 / 36.0).epsilon(1e-15));
  const long double ref = -5.0L / 36.0L - 1.0L / 1.3103706971044483036L;
  CHECK(effective_potential(ZeroPotential{}, 1.0, 1.0) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-14));
  CHECK(effective_potential(ZeroPotential{}, 1.0, 1.0) == doctest::Approx(-0.902031).epsilon(1e-6));
  const PotentialSpec specs[] = {ZeroPotential{}, PowerDecay{1.0, 0.3}, WignerVonNeumannLike{}, make_random_bump(3)};
  for (const auto& s : specs)
    for (double E : {-10.0, 0.0, 10.0}) CHECK(std::abs(effective_potential(s, 1e6, E)) < 1e-3);
  // linear in E with slope -1/(c xi^{2/3})
  for (double xi : {1.0, 50.0, 7777.0}) {
    const double d = 1e-3;
    const double slope = (effective_potential(PowerDecay{}, xi, 0.5 + d) - effective_potential(PowerDecay{}, xi, 0.5 - d)) / (2 * d);
    CHECK(slope == doctest::Approx(-1.0 / x_of_xi(xi)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(effective_potential(ZeroPotential{}, 0.5, 0.0), DomainError);
}

TEST_CASE("effective potential derivative") {
  // analytic vs central-difference routes
  AnalyticPotential with{[](double x) { return std::sin(x) / (1 + x); },
                         [](double x) { return std::cos(x) / (1 + x) - std::sin(x) / ((1 + x) * (1 + x)); }};
  AnalyticPotential without{with.q, {}};
  for (double xi : {2.0, 40.0, 900.0}) {
    const double a = effective_potential_derivative(with, xi, 0.3);
    const double b = effective_potential_derivative(without, xi, 0.3);
    CHECK(a == doctest::Approx(b).epsilon(1e-6));
  }
  const double xi = 10.0;
  CHECK(effective_potential_derivative(ZeroPotential{}, xi, 0.0) ==
        doctest::Approx(10.0 / (36.0 * xi * xi * xi)).epsilon(1e-12));
}

TEST_CASE("pruefer right-hand sides") {
  auto r = prufer_rhs(0.3, 0.0);
  CHECK(r.dlogR == 0.0);
  CHECK(r.dtheta == 1.0);
  r = prufer_rhs(0.0, 0.77);
  CHECK(r.dlogR == 0.0);
  CHECK(r.dtheta == 1.0);
  r = prufer_rhs(kPi / 2, 0.1);
  CHECK(r.dlogR == doctest::Approx(0.0).epsilon(1e-16));
  CHECK(r.dtheta == doctest::Approx(0.9));

  auto m = modified_prufer_rhs(0.4, 0.0, 0.0);
  CHECK(m.dlogR == 0.0);
  CHECK(m.dtheta == 1.0);
  m = modified_prufer_rhs(1.1, 0.19, 0.0);
  CHECK(m.dlogR == 0.0);
  CHECK(m.dtheta == doctest::Approx(0.9));
  m = modified_prufer_rhs(kPi / 4, 0.0, 0.4);
  CHECK(m.dlogR == doctest::Approx(-0.1));
  CHECK(m.dtheta == doctest::Approx(1.0));
  CHECK_THROWS_AS(modified_prufer_rhs(0.0, 1.0, 0.0), RepresentationError);
}

TEST_CASE("norm derivative two ways") {
  for (double theta : {0.1, 1.3, 2.9, -4.0})
    for (double V : {-0.4, 0.05, 0.8})
      for (double logR : {-2.0, 0.0, 3.0}) {
        const auto [p, dp] = phi_from_prufer({logR, theta});
        const double lhs = 2.0 * std::exp(2 * logR) * prufer_rhs(theta, V).dlogR;
        const double rhs = 2.0 * p * dp + 2.0 * dp * (V - 1.0) * p;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12).scale(std::exp(2 * logR)));
      }
}

TEST_CASE("pruefer coordinates") {
  auto s = prufer_from_phi(0.0, 1.0);
  CHECK(s.logR == 0.0);
  CHECK(s.theta == 0.0);
  s = prufer_from_phi(1.0, 0.0);
  CHECK(s.logR == 0.0);
  CHECK(s.theta == doctest::Approx(kPi / 2));
  s = prufer_from_phi(1.0, 1.0);
  CHECK(s.logR == doctest::Approx(0.5 * std::log(2.0)));
  CHECK(s.theta == doctest::Approx(kPi / 4));
  CHECK_THROWS_AS(prufer_from_phi(0.0, 0.0), DegenerateStateError);
  for (double th : {-7.0, 0.4, 3.0, 12.5}) {
    const PruferState in{0.37, th};
    const auto [p, dp] = phi_from_prufer(in);
    const auto out = prufer_from_phi(p, dp);
    CHECK(std::abs(out.logR - in.logR) < 1e-14);
    const double d = std::remainder(out.theta - in.theta, kTwoPi);
    CHECK(std::abs(d) < 1e-14);
  }
  for (double V : {-0.5, 0.0, 0.6}) {
    const auto m = modified_from_phi(0.3, -1.2, V);
    const auto [p, dp] = phi_from_modified(m, V);
    CHECK(p == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(dp == doctest::Approx(-1.2).epsilon(1e-14));
  }
  // V = V' = 0: both forms rotate at unit speed
  CHECK(modified_prufer_rhs(0.9, 0.0, 0.0).dtheta == prufer_rhs(0.9, 0.0).dtheta);
  CHECK(modified_prufer_rhs(0.9, 0.0, 0.0).dlogR == prufer_rhs(0.9, 0.0).dlogR);
}

TEST_CASE("liouville transform of the Airy function solves phi'' = (V - 1) phi") {
  // phi(xi) = x^{1/4} Ai(-x) with E = 0, q = 0
  auto phi = [](double xi) {
    const double x = x_of_xi(xi);
    return std::pow(x, 0.25) * oracle::airy_of_negative(x).ai;
  };
  for (double xi : {3.0, 20.0, 60.0}) {
    const double h = 1e-3;
    const double d2 = (phi(xi + h) - 2 * phi(xi) + phi(xi - h)) / (h * h);
    const double rhs = (effective_potential(ZeroPotential{}, xi, 0.0) - 1.0) * phi(xi);
    CHECK(d2 == doctest::Approx(rhs).epsilon(1e-5).scale(1.0));
  }
}
