#pragma once

#include <utility>

#include "starklab/potentials.hpp"

namespace starklab {

struct LiouvillePoint {
  double x = 0.0;
  double xi = 0.0;
};

/// phi = e^{logR} sin(theta), phi' = e^{logR} cos(theta); theta is unwrapped.
struct PruferState {
  double logR = 0.0;
  double theta = 0.0;
};

/// sqrt(1 - V) phi = e^{logR} sin(theta), phi' = e^{logR} cos(theta).
struct ModifiedPruferState {
  double logR = 0.0;
  double theta = 0.0;
};

struct PruferRhs {
  double dlogR = 0.0;
  double dtheta = 0.0;
};

double xi_of_x(double x);
double x_of_xi(double xi);
LiouvillePoint liouville_from_x(double x);

double phi_of_u(double x, double u);
double u_of_phi(double xi, double phi);
/// (u, du/dx) from (phi, dphi/dxi) at Liouville coordinate xi.
std::pair<double, double> u_state_of_phi(double xi, double phi, double dphi);
/// (phi, dphi/dxi) from (u, du/dx) at x.
std::pair<double, double> phi_state_of_u(double x, double u, double du);

/// Coefficient of xi^{-2} in V. x^{1/4} Ai(-x) is xi^{1/2} times a Bessel
/// function of order 1/3, which fixes the sign: (1/9 - 1/4) = -5/36.
inline constexpr double kCentrifugal = -5.0 / 36.0;

/// V(xi, E) = -5/(36 xi^2) + (q(c xi^{2/3}) - E)/(c xi^{2/3}), xi >= 1, so
/// that phi'' = (V - 1) phi.
double effective_potential(const PotentialSpec& spec, double xi, double E);
/// dV/dxi: analytic when the spec carries q', otherwise a central difference
/// with h = 1e-4 max(1, xi^{1/3}).
double effective_potential_derivative(const PotentialSpec& spec, double xi, double E);

PruferRhs prufer_rhs(double theta, double V);
/// Throws RepresentationError when V >= 1.
PruferRhs modified_prufer_rhs(double theta, double V, double dV);

/// Throws DegenerateStateError for (0, 0).
PruferState prufer_from_phi(double phi, double dphi);
std::pair<double, double> phi_from_prufer(const PruferState& s);

/// Requires V < 1.
ModifiedPruferState modified_from_phi(double phi, double dphi, double V);
std::pair<double, double> phi_from_modified(const ModifiedPruferState& s, double V);

}  // namespace starklab
