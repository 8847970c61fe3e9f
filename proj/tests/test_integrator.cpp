#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "oracle/airy.hpp"
#include "starklab/constants.hpp"
#include "starklab/errors.hpp"
#include "starklab/integrator.hpp"
#include "starklab/randomized.hpp"

using namespace starklab;

namespace {

IntegrationConfig tight() {
  IntegrationConfig c;
  c.rtol = 1e-11;
  c.atol = 1e-13;
  return c;
}

// (u, du/dx) = (Ai(-x), -Ai'(-x)) at x
std::array<double, 2> airy_ai_init(double x) {
  const auto a = oracle::airy_of_negative(x);
  return {a.ai, -a.aip};
}
std::array<double, 2> airy_bi_init(double x) {
  const auto a = oracle::airy_of_negative(x);
  return {a.bi, -a.bip};
}

Trajectory synthetic(const std::vector<double>& x, double (*u)(double)) {
  Trajectory t;
  t.kind = TrajectoryKind::direct;
  for (double v : x) {
    t.x.push_back(v);
    t.xi.push_back(xi_of_x(v));
    t.direct.push_back({u(v), 0.0});
  }
  return t;
}

}  // namespace

TEST_CASE("config validation") {
  IntegrationConfig c;
  CHECK_NOTHROW(c.validate());
  c.max_step = 0.6;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.rtol = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.method = "rk4";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("zero potential: bounded amplitude and converging phase") {
  const auto t = integrate_prufer(ZeroPotential{}, 0.0, 1.0, 1e4, 0.3, IntegrationConfig{});
  CHECK(t.xi.front() == 1.0);
  CHECK(t.xi.back() == 1e4);
  double worst = 0;
  for (const auto& s : t.prufer) worst = std::max(worst, std::abs(s.logR));
  CHECK(worst < 0.07);
  // theta - xi settles: its change beyond 10^3 is O(1/xi)
  const auto at = [&](double xi) {
    const auto i = static_cast<std::size_t>(std::lround((xi - 1.0) / 0.05));
    return t.prufer[i].theta - t.xi[i];
  };
  CHECK(std::abs(at(1e4) - at(1e3)) < 1e-3);
  CHECK(std::abs(at(1e4) - at(5e3)) < 2e-4);
}

TEST_CASE("theta is stored unwrapped") {
  const auto t = integrate_prufer(ZeroPotential{}, 0.0, 1.0, 100.0, 0.0, IntegrationConfig{});
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t.prufer[i].theta > t.prufer[i - 1].theta);
  CHECK(t.prufer.back().theta > 90.0);
}

TEST_CASE("phase correction matches the direct route") {
  // Airy data at x = c: theta(xi) - xi from the direct run, reconstructed
  const double x0 = kLiouvilleC;
  const auto d = integrate_direct(ZeroPotential{}, 0.0, x0, x_of_xi(2000.0), airy_ai_init(x0), tight());
  const auto [p0, dp0] = phi_state_of_u(x0, airy_ai_init(x0)[0], airy_ai_init(x0)[1]);
  const auto s0 = prufer_from_phi(p0, dp0);
  const auto p = integrate_prufer(ZeroPotential{}, 0.0, 1.0, 2000.0, s0.theta, tight());
  const auto [pd, dpd] = d.phi_at(d.size() - 1);
  const auto [pp, dpp] = p.phi_at(p.size() - 1);
  const double scale = std::exp(s0.logR);
  CHECK(pd == doctest::Approx(scale * pp).epsilon(1e-7).scale(scale));
  CHECK(dpd == doctest::Approx(scale * dpp).epsilon(1e-7).scale(scale));
}

TEST_CASE("random block increment within the envelope") {
  const auto rb = make_random_bump(21);
  const auto f = *rb.bump;
  for (long n : {10L, 20L}) {
    for (double th : {0.0, 1.0, 2.0}) {
      const double I = block_increment(rb, 0.0, n, th, IntegrationConfig{});
      CHECK(std::abs(I) <= increment_envelope(f, 0.0, n));
    }
  }
}

TEST_CASE("direct integration against the Airy oracle") {
  const auto t = integrate_direct(ZeroPotential{}, 0.0, 1.0, 1e3, airy_ai_init(1.0), tight());
  double amp = 0, dev = 0;
  for (std::size_t i = 0; i < t.size(); i += 7) {
    const double x = t.x[i];
    amp = std::max(amp, std::abs(t.direct[i][0]) * std::pow(x, 0.25));
    const auto a = oracle::airy_of_negative(x);
    dev = std::max(dev, std::abs(t.direct[i][0] - a.ai) / oracle::modulus(a));
  }
  MESSAGE("max |u| x^1/4 = " << amp << ", envelope deviation " << dev);
  CHECK(amp < 1.0 / std::sqrt(kPi) * 1.01);
  CHECK(dev < 1e-6);
}

TEST_CASE("direct integration is linear") {
  const auto a = integrate_direct(PowerDecay{}, 0.5, 1.0, 200.0, {0.3, -0.2}, IntegrationConfig{});
  const auto b = integrate_direct(PowerDecay{}, 0.5, 1.0, 200.0, {0.6, -0.4}, IntegrationConfig{});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); i += 13) {
    CHECK(b.direct[i][0] == doctest::Approx(2 * a.direct[i][0]).epsilon(1e-8).scale(1.0));
    CHECK(b.direct[i][1] == doctest::Approx(2 * a.direct[i][1]).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("wronskian") {
  const auto ai = integrate_direct(ZeroPotential{}, 0.0, 1.0, 1e3, airy_ai_init(1.0), tight());
  const auto bi = integrate_direct(ZeroPotential{}, 0.0, 1.0, 1e3, airy_bi_init(1.0), tight());
  const auto w = wronskian(ai, bi);
  for (std::size_t i = 0; i < w.size(); i += 101) CHECK(w[i] == doctest::Approx(-1.0 / kPi).epsilon(1e-8));
  CHECK(relative_drift(w) < 1e-8);
  for (double v : wronskian(ai, ai)) CHECK(v == 0.0);
  const auto ai3 = integrate_direct(ZeroPotential{}, 0.0, 1.0, 1e3, {3 * airy_ai_init(1.0)[0], 3 * airy_ai_init(1.0)[1]}, tight());
  double worst = 0;
  for (double v : wronskian(ai, ai3)) worst = std::max(worst, std::abs(v));
  CHECK(worst < 1e-9);
  // Pruefer route
  const auto p1 = integrate_prufer(PowerDecay{}, 1.0, 1.0, 1e4, 0.0, IntegrationConfig{});
  const auto p2 = integrate_prufer(PowerDecay{}, 1.0, 1.0, 1e4, 1.0, IntegrationConfig{});
  CHECK(relative_drift(wronskian(p1, p2)) < 1e-8);
  const auto p3 = integrate_prufer(PowerDecay{}, 2.0, 1.0, 1e4, 1.0, IntegrationConfig{});
  CHECK_THROWS_AS(wronskian(p1, p3), IncompatibleError);
  const auto p4 = integrate_prufer(ZeroPotential{}, 1.0, 1.0, 1e4, 1.0, IntegrationConfig{});
  CHECK_THROWS_AS(wronskian(p1, p4), IncompatibleError);
  const auto p5 = integrate_prufer(PowerDecay{}, 1.0, 1.0, 2e3, 1.0, IntegrationConfig{});
  CHECK_THROWS_AS(wronskian(p1, p5), IncompatibleError);
}

TEST_CASE("pruefer and direct routes agree at xi = 1000") {
  const PotentialSpec specs[] = {ZeroPotential{}, PowerDecay{1.0, 0.3}, make_random_bump(5)};
  for (const auto& s : specs) {
    const double beta = 0.7;
    const auto p = integrate_prufer(s, 0.5, 1.0, 1e3, beta, tight());
    const auto [u0, du0] = u_state_of_phi(1.0, std::sin(beta), std::cos(beta));
    const auto d = integrate_direct(s, 0.5, x_of_xi(1.0), x_of_xi(1e3), {u0, du0}, tight());
    const auto [pp, dpp] = p.phi_at(p.size() - 1);
    const auto [pd, dpd] = d.phi_at(d.size() - 1);
    const double norm = std::hypot(pp, dpp);
    CHECK(std::hypot(pp - pd, dpp - dpd) / norm < 1e-7);
  }
}

TEST_CASE("refinement and energy continuity") {
  IntegrationConfig c;
  c.stride = 0.0;
  const auto rb = make_random_bump(8);
  const auto a = integrate_prufer(rb, 0.0, 1.0, 1e4, 0.2, c);
  c.rtol /= 2;
  c.atol /= 2;
  const auto b = integrate_prufer(rb, 0.0, 1.0, 1e4, 0.2, c);
  CHECK(std::abs(a.prufer.back().logR - b.prufer.back().logR) < 1e-6);
  double prev = 1e9;
  for (double d : {1e-2, 1e-4, 1e-6}) {
    const auto e = integrate_prufer(rb, d, 1.0, 1e4, 0.2, IntegrationConfig{c});
    const double gap = std::abs(e.prufer.back().logR - b.prufer.back().logR);
    CHECK(gap <= prev + 1e-9);
    prev = gap;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("pair system reproduces single runs") {
  const auto rb = make_random_bump(4);
  IntegrationConfig c;
  PairRunOptions o;
  o.record_xi = {500.0, 3000.0};
  const auto pr = integrate_pair(rb, 0.0, 1.0, 3000.0, c, o);
  for (double beta : {0.0, 0.4, kPi / 2, 2.5}) {
    const auto t = integrate_prufer(rb, 0.0, 1.0, 3000.0, beta, c);
    CHECK(pr.final_state.logR(beta) == doctest::Approx(t.prufer.back().logR).epsilon(1e-7).scale(1.0));
  }
  REQUIRE(pr.recorded.size() == 2);
  CHECK(pr.recorded[1].logR(0.3) == doctest::Approx(pr.final_state.logR(0.3)));
}

TEST_CASE("l2 growth") {
  std::vector<double> grid;
  for (int i = 0; i <= 5000; ++i) grid.push_back(std::pow(10.0, 5.0 * i / 5000.0));
  const auto one = synthetic(grid, [](double) { return 1.0; });
  CHECK(l2_growth(one, log_grid(1.0, 1e5, 20)).exponent == doctest::Approx(1.0).epsilon(1e-3));
  const auto inv = synthetic(grid, [](double x) { return 1.0 / x; });
  CHECK(std::abs(l2_growth(inv, log_grid(1.0, 1e5, 20)).exponent) < 1e-3);
  std::vector<double> sparse{1.0, 10.0, 100.0, 1000.0};
  CHECK_THROWS_AS(l2_growth(synthetic(sparse, [](double) { return 1.0; }), log_grid(1.0, 1e3, 20)), ResolutionError);
  for (double beta : {0.0, 1.0, 2.0}) {
    const auto t = integrate_prufer(ZeroPotential{}, 0.0, 1.0, 2e4, beta, IntegrationConfig{});
    const auto g = l2_growth(t, log_grid(2.0, t.x.back(), 20));
    CHECK(g.exponent == doctest::Approx(0.5).epsilon(0.05 / 0.5));
  }
}

TEST_CASE("minimal growth boundary condition") {
  const auto z = find_minimal_growth_bc(ZeroPotential{}, 0.0, 1e4, IntegrationConfig{});
  CHECK_FALSE(z.distinguished);
  CHECK_FALSE(z.beta_star.has_value());
  const auto run = integrate_pair(make_random_bump(2), 0.0, 1.0, 2e4, IntegrationConfig{});
  for (double b : {0.1, 1.0, 2.9}) CHECK(run.final_state.logR(b) == doctest::Approx(run.final_state.logR(b + kPi)).epsilon(1e-10));
  CHECK_THROWS_AS(find_minimal_growth_bc(ZeroPotential{}, 0.0, 100.0, IntegrationConfig{}), DomainError);
}

TEST_CASE("minimal growth direction separates for a random realization") {
  const auto rb = make_random_bump(3);
  const auto r = find_minimal_growth_bc(rb, 0.0, std::pow(64.0, 3), IntegrationConfig{});
  REQUIRE(r.distinguished);
  MESSAGE("logR(beta*) = " << r.logR_min << ", orthogonal " << r.logR_orthogonal);
  CHECK(r.logR_min < r.logR_orthogonal - 1.0);
  const double closed = minimal_growth_bc_closed_form(r.final_state);
  CHECK(std::abs(std::remainder(closed - *r.beta_star, kPi)) < 1e-3);
}

TEST_CASE("trajectory export") {
  const auto t = integrate_prufer(PowerDecay{}, 0.3, 1.0, 20.0, 0.1, IntegrationConfig{});
  std::ostringstream os;
  write_trajectory_csv(t, os);
  const auto text = os.str();
  CHECK(text.rfind("xi,x,logR,theta\n", 0) == 0);
  const auto path = std::filesystem::temp_directory_path() / "starklab_traj.bin";
  write_trajectory_binary(t, path);
  CHECK(std::filesystem::file_size(path) == 8 + 8 + 8 + 8 + 4 + 4 + 32 * t.size());
  const auto back = read_trajectory_binary(path);
  CHECK(back.size() == t.size());
  CHECK(back.E == t.E);
  CHECK(back.beta == t.beta);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back.xi[i] == t.xi[i]);
    CHECK(back.prufer[i].logR == t.prufer[i].logR);
    CHECK(back.prufer[i].theta == t.prufer[i].theta);
  }
  std::filesystem::remove(path);
  const auto d = integrate_direct(PowerDecay{}, 0.3, 1.0, 20.0, {0.0, 1.0}, IntegrationConfig{});
  std::ostringstream ds;
  write_trajectory_csv(d, ds);
  CHECK(ds.str().rfind("xi,x,u,du\n", 0) == 0);
}
