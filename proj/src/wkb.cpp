#include "starklab/wkb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include "json.hpp"

#include "starklab/constants.hpp"
#include "starklab/errors.hpp"
#include "starklab/transforms.hpp"

namespace starklab {
namespace {

using boost::math::quadrature::gauss_kronrod;

std::function<double(double)> sampler_of(const PotentialSpec& spec) {
  auto s = std::make_shared<const PotentialSpec>(spec);
  return [s](double x) { return eval_potential(*s, x); };
}

}  // namespace

Decomposition mollify_decompose(const PotentialSpec& spec, std::shared_ptr<const BumpFunction> eta) {
  if (!eta) eta = std::make_shared<const BumpFunction>(BumpFunction::default_mollifier());
  if (std::abs(eta->integral() - 1.0) > 1e-10)
    throw std::invalid_argument("mollifier: integral must be 1 (got " + std::to_string(eta->integral()) + ")");
  validate(spec);
  auto q = sampler_of(spec);
  Decomposition d;
  d.q = q;
  d.mollifier = eta;
  d.kind = SplitKind::mollified;
  d.x_min = 1.0;
  d.label = "mollified(" + describe(spec) + ",eta=" + eta->label() + ")";
  auto q2 = [q, eta](double x) {
    if (!(x >= 1.0)) throw DomainError("mollified split: x must be >= 1");
    const double w = 1.0 / std::sqrt(x);
    const auto s = eta->nodes();
    const auto wt = eta->weights();
    const auto f = eta->node_values();
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += wt[i] * f[i] * q(x - s[i] * w);
    return acc;
  };
  d.q2 = q2;
  d.q1 = [q, q2](double x) { return q(x) - q2(x); };
  d.dq2 = [q, q2, eta](double x) {
    if (!(x >= 1.0)) throw DomainError("mollified split: x must be >= 1");
    const double w = 1.0 / std::sqrt(x);
    const auto s = eta->nodes();
    const auto wt = eta->weights();
    const auto df = eta->node_derivatives();
    const double qx = q(x);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double qy = q(x - s[i] * w);
      a += wt[i] * df[i] * (qy - qx);
      b += wt[i] * s[i] * df[i] * qy;
    }
    return q2(x) / (2.0 * x) + std::sqrt(x) * a + b / (2.0 * x);
  };
  return d;
}

Decomposition analytic_decompose(const PotentialSpec& spec) {
  validate(spec);
  auto s = std::make_shared<const PotentialSpec>(spec);
  Decomposition d;
  d.q = sampler_of(spec);
  d.q2 = d.q;
  d.q1 = [](double) { return 0.0; };
  if (has_derivative(spec)) {
    d.dq2 = [s](double x) { return *eval_potential_derivative(*s, x); };
  } else {
    d.dq2 = [s](double x) {
      const double h = 1e-5 * std::max(1.0, std::abs(x));
      return (eval_potential(*s, x + h) - eval_potential(*s, x - h)) / (2.0 * h);
    };
  }
  d.kind = SplitKind::analytic;
  d.x_min = std::holds_alternative<RandomBump>(spec) ? 1.0 : 0.0;
  d.label = "analytic(" + describe(spec) + ")";
  return d;
}

Decomposition decompose(const PotentialSpec& spec, std::shared_ptr<const BumpFunction> eta) {
  if (std::holds_alternative<ZeroPotential>(spec) || std::holds_alternative<PowerDecay>(spec))
    return analytic_decompose(spec);
  if (const auto* a = std::get_if<AnalyticPotential>(&spec); a && a->dq) return analytic_decompose(spec);
  return mollify_decompose(spec, std::move(eta));
}

double decomposition_zeta(const Decomposition& d, double x_lo, double x_hi, int points) {
  x_lo = std::max(x_lo, std::max(d.x_min, 1e-300));
  if (!(x_hi > x_lo) || points < 2) throw DomainError("decomposition_zeta: empty probe range");
  double z = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = x_lo * std::pow(x_hi / x_lo, static_cast<double>(i) / (points - 1));
    z = std::max(z, std::abs(d.q2(x)) / x);
  }
  return z;
}

double wkb_anchor(const Decomposition& d, double E) {
  auto g = [&](double x) { return x - d.q2(x) + E - 1.0; };
  // last upward crossing: an oscillating q2 can push the integrand back
  // below zero after the first one. The scan runs well past the last
  // failure, where q2/x is already small.
  double x = d.x_min;
  double fail = -1.0, ok_after = x;
  double prev = x;
  bool prev_ok = g(x) >= 0.0;
  if (!prev_ok) fail = x;
  double step = 0.01;
  for (long it = 0;; ++it) {
    if (fail < 0.0 && it > 0 && x >= d.x_min + 16.0) break;
    if (fail >= 0.0 && x > 4.0 * fail + 10.0) break;
    if (it > 2000000) throw DomainError("wkb_anchor: x - q2 + E never settles above 1");
    x = prev + step;
    const bool ok = g(x) >= 0.0;
    if (!ok) fail = x;
    if (ok && !prev_ok) ok_after = x;
    prev_ok = ok;
    prev = x;
    step = std::min(step * 1.05, 0.05 / std::sqrt(std::max(1.0, x)) + 0.005);
  }
  if (fail < 0.0) return d.x_min;
  double lo = fail, hi = ok_after;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) >= 0.0)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  return hi;
}

namespace {

double phase_integrand(const Decomposition& d, double E, double t) {
  const double a = t - d.q2(t) + E;
  if (!(a > 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "wkb phase: t - q2(t) + E <= 0 at t = " << t;
    throw DomainError(os.str());
  }
  const double r = std::sqrt(a);
  const double q1 = d.kind == SplitKind::analytic ? 0.0 : d.q1(t);
  return r - q1 / (2.0 * r);
}

// Panel width: the mollified integrand oscillates on the scale x^{-1/2};
// the analytic one only varies on the scale x.
double panel_width(const Decomposition& d, double t) {
  if (d.kind == SplitKind::mollified) return 0.5 / std::sqrt(std::max(1.0, t));
  return std::max(0.25, 0.05 * t);
}

double panel(const Decomposition& d, double E, double t, double u) {
  auto f = [&](double s) { return phase_integrand(d, E, s); };
  // square-root endpoint at a turning point: t = t0 + s^2 makes it smooth
  const double w = u - t;
  if (t - d.q2(t) + E < w) {
    return gauss_kronrod<double, 31>::integrate([&](double s) { return 2.0 * s * f(t + s * s); }, 0.0,
                                                std::sqrt(w), 8, 1e-13);
  }
  if (u - d.q2(u) + E < w) {
    return gauss_kronrod<double, 31>::integrate([&](double s) { return 2.0 * s * f(u - s * s); }, 0.0,
                                                std::sqrt(w), 8, 1e-13);
  }
  return gauss_kronrod<double, 31>::integrate(f, t, u, 8, 1e-13);
}

double integrate_span(const Decomposition& d, double E, double a, double b) {
  if (b == a) return 0.0;
  const double sign = b > a ? 1.0 : -1.0;
  if (b < a) std::swap(a, b);
  double acc = 0.0;
  double t = a;
  while (t < b) {
    const double u = std::min(b, t + panel_width(d, t));
    acc += panel(d, E, t, u);
    t = u;
  }
  return sign * acc;
}

}  // namespace

double wkb_phase(const Decomposition& d, double E, double x, double x0) {
  if (x < d.x_min || x0 < d.x_min) throw DomainError("wkb_phase: coordinate below the decomposition domain");
  return integrate_span(d, E, x0, x);
}

double wkb_phase(const Decomposition& d, double E, double x) { return wkb_phase(d, E, x, wkb_anchor(d, E)); }

WkbSolution::WkbSolution(std::shared_ptr<const Decomposition> d, double E)
    : WkbSolution(d, E, wkb_anchor(*d, E)) {}

WkbSolution::WkbSolution(std::shared_ptr<const Decomposition> d, double E, double anchor)
    : d_(std::move(d)), E_(E), x0_(anchor) {
  if (!d_) throw std::invalid_argument("WkbSolution: null decomposition");
  nodes_.push_back(x0_);
  phases_.push_back(0.0);
}

double WkbSolution::integrate_panel(double a, double b) const { return integrate_span(*d_, E_, a, b); }

double WkbSolution::amplitude(double x) const {
  const double a = x - d_->q2(x) + E_;
  if (!(a > 0.0)) throw DomainError("wkb amplitude: x - q2 + E <= 0 at x = " + std::to_string(x));
  return 1.0 / std::sqrt(std::sqrt(a));
}

double WkbSolution::phase(double x) const {
  if (x < x0_) return -integrate_panel(x, x0_);
  // extend the table in unit-ish panels until it covers x
  while (nodes_.back() < x) {
    const double a = nodes_.back();
    const double b = a + std::max(1.0, 64.0 * panel_width(*d_, a));
    phases_.push_back(phases_.back() + integrate_panel(a, b));
    nodes_.push_back(b);
  }
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  return phases_[j] + integrate_panel(nodes_[j], x);
}

std::complex<double> WkbSolution::operator()(double x) const { return std::polar(amplitude(x), phase(x)); }

std::complex<double> wkb_eval(const Decomposition& d, double E, double x) {
  const double a = x - d.q2(x) + E;
  if (!(a > 0.0)) throw DomainError("wkb_eval: x - q2 + E <= 0 at x = " + std::to_string(x));
  return std::polar(1.0 / std::sqrt(std::sqrt(a)), wkb_phase(d, E, x));
}

WkbResidual wkb_residual(const std::vector<double>& xs, const std::vector<double>& us, const WkbSolution& w,
                         std::pair<double, double> fit_window, std::pair<double, double> test_window) {
  if (xs.size() != us.size()) throw std::invalid_argument("wkb_residual: size mismatch");
  WkbResidual r;
  r.E = w.E();
  r.fit_window = fit_window;
  r.test_window = test_window;
  // normal equations for u = 2 (Ar Re u+ - Ai Im u+)
  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < fit_window.first || xs[i] > fit_window.second) continue;
    const auto up = w(xs[i]);
    const double p = 2.0 * up.real(), q = -2.0 * up.imag();
    s11 += p * p;
    s12 += p * q;
    s22 += q * q;
    b1 += p * us[i];
    b2 += q * us[i];
    ++r.fit_points;
  }
  if (r.fit_points < 4) throw FitError("wkb_residual: fewer than 4 samples in the fit window");
  const double det = s11 * s22 - s12 * s12;
  if (!(std::abs(det) > 0.0)) throw FitError("wkb_residual: singular fit");
  r.A = {(b1 * s22 - b2 * s12) / det, (s11 * b2 - s12 * b1) / det};
  if (std::abs(r.A) < 1e-12) throw FitError("wkb_residual: fitted amplitude below 1e-12");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < test_window.first || xs[i] > test_window.second) continue;
    const double model = 2.0 * (r.A * w(xs[i])).real();
    num = std::max(num, std::abs(us[i] - model));
    den = std::max(den, std::abs(model));
    ++r.test_points;
  }
  if (r.test_points < 4) throw FitError("wkb_residual: fewer than 4 samples in the test window");
  r.residual = num / den;
  return r;
}

WkbResidual wkb_residual(const Trajectory& traj, const WkbSolution& w, std::pair<double, double> fit_window,
                         std::pair<double, double> test_window) {
  if (traj.E != w.E()) throw IncompatibleError("wkb_residual: trajectory and WKB solution energies differ");
  std::vector<double> xs, us;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double x = traj.x[i];
    const bool in_fit = x >= fit_window.first && x <= fit_window.second;
    const bool in_test = x >= test_window.first && x <= test_window.second;
    if (!in_fit && !in_test) continue;
    xs.push_back(x);
    us.push_back(traj.u_at(i).first);
  }
  return wkb_residual(xs, us, w, fit_window, test_window);
}

std::string to_json(const WkbResidual& r) {
  nlohmann::ordered_json j;
  j["E"] = r.E;
  j["fit_window"] = {r.fit_window.first, r.fit_window.second};
  j["test_window"] = {r.test_window.first, r.test_window.second};
  j["A_re"] = r.A.real();
  j["A_im"] = r.A.imag();
  j["residual"] = r.residual;
  return j.dump();
}

namespace {

struct StreamingFit {
  WindowPair win;
  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  bool solved = false;
  WkbResidual out;
  double num = 0.0, den = 0.0;

  void add(double x, double u, std::complex<double> up) {
    if (x >= win.fit.first && x <= win.fit.second) {
      const double p = 2.0 * up.real(), q = -2.0 * up.imag();
      s11 += p * p;
      s12 += p * q;
      s22 += q * q;
      b1 += p * u;
      b2 += q * u;
      ++out.fit_points;
    }
    if (x >= win.test.first && x <= win.test.second) {
      if (!solved) solve();
      const double model = 2.0 * (out.A * up).real();
      num = std::max(num, std::abs(u - model));
      den = std::max(den, std::abs(model));
      ++out.test_points;
    }
  }

  void solve() {
    if (out.fit_points < 4) throw FitError("wkb_residual: fewer than 4 samples in the fit window");
    const double det = s11 * s22 - s12 * s12;
    if (!(std::abs(det) > 0.0)) throw FitError("wkb_residual: singular fit");
    out.A = {(b1 * s22 - b2 * s12) / det, (s11 * b2 - s12 * b1) / det};
    if (std::abs(out.A) < 1e-12) throw FitError("wkb_residual: fitted amplitude below 1e-12");
    solved = true;
  }
};

// 8-point Gauss-Legendre on [-1, 1] for short phase increments.
constexpr double kGl8x[4] = {0.18343464249564980494, 0.52553240991632898582, 0.79666647741362673959,
                             0.96028985649753623168};
constexpr double kGl8w[4] = {0.36268378337836198297, 0.31370664587788728734, 0.22238103445337447054,
                             0.10122853629037625915};

}  // namespace

std::vector<WkbResidual> wkb_residual_streaming(const PotentialSpec& spec, const WkbSolution& w, double beta,
                                                const std::vector<WindowPair>& windows,
                                                const IntegrationConfig& cfg, const WkbSampleSink& sink) {
  if (windows.empty()) throw std::invalid_argument("wkb_residual_streaming: no windows");
  std::vector<StreamingFit> fits;
  double x_end = 0.0;
  IntegrationConfig c = cfg;
  c.capture_windows.clear();
  for (const auto& win : windows) {
    if (!(win.fit.second > win.fit.first) || !(win.test.second > win.test.first) || win.fit.second > win.test.first)
      throw std::invalid_argument("wkb_residual_streaming: fit window must precede the test window");
    if (win.fit.first < std::max(w.anchor(), kLiouvilleC))
      throw DomainError("wkb_residual_streaming: fit window starts before the anchor or the transform region");
    StreamingFit f;
    f.win = win;
    f.out.E = w.E();
    f.out.fit_window = win.fit;
    f.out.test_window = win.test;
    fits.push_back(f);
    x_end = std::max(x_end, win.test.second);
    c.capture_windows.emplace_back(xi_of_x(win.fit.first), xi_of_x(win.fit.second));
    c.capture_windows.emplace_back(xi_of_x(win.test.first), xi_of_x(win.test.second));
  }
  const Decomposition& d = w.decomposition();
  const double E = w.E();
  bool have_prev = false;
  double x_prev = 0.0, phase = 0.0;
  integrate_prufer_observed(spec, E, 1.0, xi_of_x(x_end), {0.0, beta}, c, [&](double xi, const PruferState& s) {
    const auto [p, dp] = phi_from_prufer(s);
    const auto [u, du] = u_state_of_phi(xi, p, dp);
    const double x = x_of_xi(xi);
    if (have_prev && x - x_prev < 1.0) {
      const double mid = 0.5 * (x + x_prev), half = 0.5 * (x - x_prev);
      double acc = 0.0;
      for (int k = 0; k < 4; ++k)
        acc += kGl8w[k] * (phase_integrand(d, E, mid - half * kGl8x[k]) + phase_integrand(d, E, mid + half * kGl8x[k]));
      phase += half * acc;
    } else {
      phase = w.phase(x);
    }
    have_prev = true;
    x_prev = x;
    const auto up = std::polar(w.amplitude(x), phase);
    for (auto& f : fits) f.add(x, u, up);
    if (sink) sink(x, u, up);
  });
  std::vector<WkbResidual> out;
  for (auto& f : fits) {
    if (!f.solved) f.solve();
    if (f.out.test_points < 4) throw FitError("wkb_residual: fewer than 4 samples in the test window");
    f.out.residual = f.num / f.den;
    out.push_back(f.out);
  }
  return out;
}

// ---------------------------------------------------------------- keyint

namespace {

struct KeyintSystem {
  const PotentialSpec* spec;
  double E;
  // logR, theta - xi, int V sin 2 theta
  void operator()(double xi, const dop853::State<3>& y, dop853::State<3>& dy) const {
    const double V = effective_potential(*spec, xi, E);
    const double th = xi + y[1];
    const double s = std::sin(th), c = std::cos(th);
    dy[0] = V * s * c;
    dy[1] = -V * s * s;
    dy[2] = 2.0 * V * s * c;
  }
};

struct ModifiedKeyintSystem {
  const PotentialSpec* spec;
  double E;
  // logR~, theta~ - xi, int V'/(1-V) cos 2 theta~
  void operator()(double xi, const dop853::State<3>& y, dop853::State<3>& dy) const {
    const double V = effective_potential(*spec, xi, E);
    const double dV = effective_potential_derivative(*spec, xi, E);
    const auto r = modified_prufer_rhs(xi + y[1], V, dV);
    dy[0] = r.dlogR;
    dy[1] = r.dtheta - 1.0;
    dy[2] = dV / (1.0 - V) * std::cos(2.0 * (xi + y[1]));
  }
};

template <class System>
std::vector<double> sample_component(System sys, dop853::State<3> y, double xi0, const std::vector<double>& N,
                                     const IntegrationConfig& cfg, int component, std::vector<double>* logR) {
  std::vector<double> out;
  auto integ = dop853::make_integrator<3>(sys, cfg.options());
  std::size_t k = 0;
  while (k < N.size() && N[k] <= xi0) {
    out.push_back(y[static_cast<std::size_t>(component)]);
    if (logR) logR->push_back(0.0);
    ++k;
  }
  const double y00 = y[0];
  if (k == N.size()) return out;
  integ.integrate(xi0, y, N.back(), [&](const auto& step) {
    while (k < N.size() && N[k] <= step.t1) {
      const auto s = step.at(N[k]);
      out.push_back(s[static_cast<std::size_t>(component)]);
      if (logR) logR->push_back(s[0] - y00);
      ++k;
    }
  });
  return out;
}

}  // namespace

KeyintResult keyint_partial(const PotentialSpec& spec, double E, double beta, std::vector<double> N_list,
                            const IntegrationConfig& cfg, double modified_start) {
  cfg.validate();
  std::sort(N_list.begin(), N_list.end());
  if (N_list.empty()) throw std::invalid_argument("keyint_partial: empty N list");
  if (N_list.front() < 1.0) throw DomainError("keyint_partial: N must be >= 1");
  KeyintResult r;
  r.N = N_list;
  r.modified_start = modified_start;
  r.partial = sample_component(KeyintSystem{&spec, E}, {0.0, beta - 1.0, 0.0}, 1.0, N_list, cfg, 2, &r.delta_logR);

  if (has_derivative(spec) && modified_start >= 1.0 && modified_start < N_list.back()) {
    try {
      const double V0 = effective_potential(spec, modified_start, E);
      // carry the true solution from xi = 1 up to the modified start
      PruferState s{0.0, beta};
      if (modified_start > 1.0) {
        IntegrationConfig c = cfg;
        c.stride = 0.0;
        s = integrate_prufer_observed(spec, E, 1.0, modified_start, s, c, {});
      }
      const auto [p, dp] = phi_from_prufer(s);
      const auto m = modified_from_phi(p, dp, V0);
      r.modified_partial = sample_component(ModifiedKeyintSystem{&spec, E},
                                            {m.logR, m.theta - modified_start, 0.0}, modified_start, N_list, cfg, 2,
                                            nullptr);
    } catch (const RepresentationError&) {
      r.modified_partial.reset();
    } catch (const StiffnessError&) {
      // k = V'/(4(1 - V)) blows up as V approaches 1
      r.modified_partial.reset();
    }
  }
  return r;
}

double cauchy_variation(const std::vector<double>& N, const std::vector<double>& partial, double a, double b) {
  if (N.size() != partial.size()) throw std::invalid_argument("cauchy_variation: size mismatch");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < N.size(); ++i) {
    if (N[i] < a || N[i] > b) continue;
    lo = std::min(lo, partial[i]);
    hi = std::max(hi, partial[i]);
  }
  if (!(hi >= lo)) throw std::invalid_argument("cauchy_variation: no partials in range");
  return hi - lo;
}

}  // namespace starklab
