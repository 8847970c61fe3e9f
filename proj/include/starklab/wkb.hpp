#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "starklab/integrator.hpp"
#include "starklab/potentials.hpp"

namespace starklab {

enum class SplitKind { analytic, mollified };

/// q = q1 + q2 with q2 slowly varying on the scale x^{-1/2}.
struct Decomposition {
  std::function<double(double)> q;
  std::function<double(double)> q1;
  std::function<double(double)> q2;
  std::function<double(double)> dq2;
  std::shared_ptr<const BumpFunction> mollifier;  // null for the analytic split
  SplitKind kind = SplitKind::analytic;
  /// Smallest x at which the samplers may be evaluated.
  double x_min = 0.0;
  std::string label;
};

/// q2(x) = int_0^1 eta(s) q(x - s x^{-1/2}) ds on the mollifier's 64-point
/// rule; q2' by the three-term formula that needs no derivative of q.
/// Samplers throw DomainError for x < 1. Requires int eta = 1.
Decomposition mollify_decompose(const PotentialSpec& spec, std::shared_ptr<const BumpFunction> eta);
/// q2 = q, q1 = 0; q2' analytic when available, else a central difference.
Decomposition analytic_decompose(const PotentialSpec& spec);
/// Analytic split for zero and power-decay specs and for analytic specs that
/// carry a derivative; mollified otherwise.
Decomposition decompose(const PotentialSpec& spec,
                        std::shared_ptr<const BumpFunction> eta = nullptr);

/// sup |q2(x)| / x over a probe grid on [x_lo, x_hi].
double decomposition_zeta(const Decomposition& d, double x_lo, double x_hi, int points = 2000);

/// inf { x0 >= d.x_min : x - q2(x) + E >= 1 for all x >= x0 }, located by
/// a marching scan and bisection on the last upward crossing.
double wkb_anchor(const Decomposition& d, double E);

/// int_{x0}^{x} [sqrt(a) - q1 / (2 sqrt(a))] dt with a = t - q2(t) + E, by
/// adaptive Gauss-Kronrod panels. Throws DomainError naming t if a <= 0.
double wkb_phase(const Decomposition& d, double E, double x, double x0);
double wkb_phase(const Decomposition& d, double E, double x);

/// u+ = (x - q2 + E)^{-1/4} e^{i phase} with a cached phase table.
class WkbSolution {
 public:
  WkbSolution(std::shared_ptr<const Decomposition> d, double E);
  WkbSolution(std::shared_ptr<const Decomposition> d, double E, double anchor);

  double E() const noexcept { return E_; }
  double anchor() const noexcept { return x0_; }
  double amplitude(double x) const;
  double phase(double x) const;
  std::complex<double> operator()(double x) const;
  const Decomposition& decomposition() const noexcept { return *d_; }

 private:
  double integrate_panel(double a, double b) const;

  std::shared_ptr<const Decomposition> d_;
  double E_;
  double x0_;
  mutable std::vector<double> nodes_;   // table abscissae, starting at x0
  mutable std::vector<double> phases_;  // phase at each node
};

std::complex<double> wkb_eval(const Decomposition& d, double E, double x);

struct WkbResidual {
  double E = 0.0;
  std::pair<double, double> fit_window;
  std::pair<double, double> test_window;
  std::complex<double> A;
  double residual = 0.0;
  std::size_t fit_points = 0;
  std::size_t test_points = 0;
};

/// Fit u_num ~ 2 Re(A u+) on the fit window, report
/// sup|u_num - 2 Re(A u+)| / sup|2 Re(A u+)| on the test window.
/// Throws FitError when |A| < 1e-12 or a window holds fewer than 4 captures.
WkbResidual wkb_residual(const Trajectory& traj, const WkbSolution& w, std::pair<double, double> fit_window,
                         std::pair<double, double> test_window);

/// Same protocol on raw samples (x, u).
WkbResidual wkb_residual(const std::vector<double>& x, const std::vector<double>& u, const WkbSolution& w,
                         std::pair<double, double> fit_window, std::pair<double, double> test_window);

std::string to_json(const WkbResidual& r);

struct WindowPair {
  std::pair<double, double> fit;
  std::pair<double, double> test;
};

/// Observer for the streaming residual: (x, u_num, u+ at x).
using WkbSampleSink = std::function<void(double, double, std::complex<double>)>;

/// Two-window residuals for several window pairs from one Pruefer run that
/// starts at xi = 1 with theta = beta. Captures stream through normal-equation
/// accumulators, so no trajectory is stored; each fit window must end before
/// its test window starts.
std::vector<WkbResidual> wkb_residual_streaming(const PotentialSpec& spec, const WkbSolution& w, double beta,
                                                const std::vector<WindowPair>& windows,
                                                const IntegrationConfig& cfg, const WkbSampleSink& sink = {});

struct KeyintResult {
  std::vector<double> N;
  /// int_1^N V sin(2 theta) dxi
  std::vector<double> partial;
  /// logR(N) - logR(1); partial = 2 * this up to integration error
  std::vector<double> delta_logR;
  /// int V'/(1-V) cos(2 theta~) dxi from `modified_start`, when the spec
  /// carries a derivative and V < 1 on the whole range.
  std::optional<std::vector<double>> modified_partial;
  double modified_start = 1.0;
};

/// Partials evaluated by carrying the integrals as extra ODE components.
KeyintResult keyint_partial(const PotentialSpec& spec, double E, double beta, std::vector<double> N_list,
                            const IntegrationConfig& cfg = {}, double modified_start = 1.0);

/// max - min of the partials whose N lies in [a, b].
double cauchy_variation(const std::vector<double>& N, const std::vector<double>& partial, double a, double b);

}  // namespace starklab
