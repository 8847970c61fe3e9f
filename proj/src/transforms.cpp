#include "starklab/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "starklab/constants.hpp"
#include "starklab/errors.hpp"

namespace starklab {

double xi_of_x(double x) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("xi_of_x: x must be finite and >= 0");
  return 2.0 / 3.0 * x * std::sqrt(x);
}

double x_of_xi(double xi) {
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw DomainError("x_of_xi: xi must be finite and >= 0");
  const double s = std::cbrt(xi);
  return kLiouvilleC * s * s;
}

LiouvillePoint liouville_from_x(double x) { return {x, xi_of_x(x)}; }

double phi_of_u(double x, double u) {
  if (!(x > 0.0)) throw DomainError("phi_of_u: x must be > 0");
  return std::sqrt(std::sqrt(x)) * u;
}

double u_of_phi(double xi, double phi) {
  if (!(xi > 0.0)) throw DomainError("u_of_phi: xi must be > 0");
  return phi / std::sqrt(std::sqrt(x_of_xi(xi)));
}

std::pair<double, double> u_state_of_phi(double xi, double phi, double dphi) {
  if (!(xi > 0.0)) throw DomainError("u_state_of_phi: xi must be > 0");
  const double x = x_of_xi(xi);
  const double x14 = std::sqrt(std::sqrt(x));
  const double u = phi / x14;
  // dxi/dx = x^{1/2}; phi' = x^{-1/4}(1/4 x^{-1} u + u'), and x^{3/2} = 3 xi / 2.
  const double du = x14 * (dphi - phi / (6.0 * xi));
  return {u, du};
}

std::pair<double, double> phi_state_of_u(double x, double u, double du) {
  if (!(x > 0.0)) throw DomainError("phi_state_of_u: x must be > 0");
  const double x14 = std::sqrt(std::sqrt(x));
  const double phi = x14 * u;
  const double dphi = (0.25 * u / x + du) / x14;
  return {phi, dphi};
}

double effective_potential(const PotentialSpec& spec, double xi, double E) {
  if (!(xi >= 1.0)) throw DomainError("effective_potential: xi must be >= 1");
  const double s = std::cbrt(xi);
  const double x = kLiouvilleC * s * s;
  const double centrifugal = kCentrifugal / (xi * xi);
  if (const auto* r = std::get_if<RandomBump>(&spec)) return centrifugal + detail::random_in_xi(*r, xi, s) - E / x;
  return centrifugal + (eval_potential(spec, x) - E) / x;
}

double effective_potential_derivative(const PotentialSpec& spec, double xi, double E) {
  if (!(xi >= 1.0)) throw DomainError("effective_potential_derivative: xi must be >= 1");
  const double s = std::cbrt(xi);
  const double x = kLiouvilleC * s * s;
  const double dx_dxi = 2.0 / 3.0 * x / xi;
  if (const auto* r = std::get_if<RandomBump>(&spec)) {
    if (r->bump->has_derivative())
      return -2.0 * kCentrifugal / (xi * xi * xi) + eval_random_in_xi_derivative(*r, xi) + E / (x * x) * dx_dxi;
  } else if (auto dq = eval_potential_derivative(spec, x)) {
    const double q = eval_potential(spec, x);
    return -2.0 * kCentrifugal / (xi * xi * xi) + (*dq * x - (q - E)) / (x * x) * dx_dxi;
  }
  const double h = 1e-4 * std::max(1.0, s);
  const double lo = std::max(1.0, xi - h);
  const double hi = xi + h;
  return (effective_potential(spec, hi, E) - effective_potential(spec, lo, E)) / (hi - lo);
}

PruferRhs prufer_rhs(double theta, double V) {
  const double s2 = std::sin(2.0 * theta);
  const double c2 = std::cos(2.0 * theta);
  return {0.5 * V * s2, 1.0 - 0.5 * V * (1.0 - c2)};
}

PruferRhs modified_prufer_rhs(double theta, double V, double dV) {
  if (!(V < 1.0)) throw RepresentationError("modified Pruefer form requires V < 1");
  const double k = dV / (4.0 * (1.0 - V));
  const double c2 = std::cos(2.0 * theta);
  return {-k * (1.0 - c2), std::sqrt(1.0 - V) - k * c2};
}

PruferState prufer_from_phi(double phi, double dphi) {
  if (phi == 0.0 && dphi == 0.0) throw DegenerateStateError("prufer_from_phi: zero state");
  return {0.5 * std::log(phi * phi + dphi * dphi), std::atan2(phi, dphi)};
}

std::pair<double, double> phi_from_prufer(const PruferState& s) {
  const double r = std::exp(s.logR);
  return {r * std::sin(s.theta), r * std::cos(s.theta)};
}

ModifiedPruferState modified_from_phi(double phi, double dphi, double V) {
  if (!(V < 1.0)) throw RepresentationError("modified Pruefer form requires V < 1");
  const double a = std::sqrt(1.0 - V) * phi;
  if (a == 0.0 && dphi == 0.0) throw DegenerateStateError("modified_from_phi: zero state");
  return {0.5 * std::log(a * a + dphi * dphi), std::atan2(a, dphi)};
}

std::pair<double, double> phi_from_modified(const ModifiedPruferState& s, double V) {
  if (!(V < 1.0)) throw RepresentationError("modified Pruefer form requires V < 1");
  const double r = std::exp(s.logR);
  return {r * std::sin(s.theta) / std::sqrt(1.0 - V), r * std::cos(s.theta)};
}

}  // namespace starklab
