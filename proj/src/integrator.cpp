#include "starklab/integrator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "starklab/constants.hpp"
#include "starklab/errors.hpp"
#include "starklab/format.hpp"

namespace starklab {

void IntegrationConfig::validate() const {
  if (!(rtol > 0.0)) throw std::invalid_argument("rtol: must be > 0");
  if (!(atol > 0.0)) throw std::invalid_argument("atol: must be > 0");
  if (!(max_step > 0.0) || max_step > 0.5) throw std::invalid_argument("max_step: must be in (0, 0.5]");
  if (!(min_step > 0.0)) throw std::invalid_argument("min_step: must be > 0");
  if (!(stride >= 0.0) || !std::isfinite(stride)) throw std::invalid_argument("stride: must be >= 0");
  for (const auto& [a, b] : capture_windows)
    if (!(b > a)) throw std::invalid_argument("capture_windows: each window needs end > start");
  if (method != "dop853") throw std::invalid_argument("method: only 'dop853' is available");
}

dop853::Options IntegrationConfig::options() const {
  dop853::Options o;
  o.rtol = rtol;
  o.atol = atol;
  o.max_step = max_step;
  o.min_step = min_step;
  return o;
}

namespace {

// Capture points in (t0, t1]: stride points t0 + k*stride (inside windows if
// any), explicit extras, and t1 itself. Strictly increasing.
class CaptureSchedule {
 public:
  CaptureSchedule(double t0, double t1, double stride, std::vector<std::pair<double, double>> windows,
                  std::vector<double> extra)
      : t0_(t0), t1_(t1), stride_(stride), windows_(std::move(windows)) {
    std::sort(windows_.begin(), windows_.end());
    extra.push_back(t1);
    std::sort(extra.begin(), extra.end());
    for (double e : extra)
      if (e > t0 && e <= t1 && (extra_.empty() || e > extra_.back())) extra_.push_back(e);
    advance_stride();
  }

  double peek() const { return std::min(next_stride_, extra_.size() > ei_ ? extra_[ei_] : kInf); }

  void pop() {
    const double p = peek();
    if (next_stride_ == p) {
      ++k_;
      advance_stride();
    }
    if (ei_ < extra_.size() && extra_[ei_] == p) ++ei_;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  void advance_stride() {
    next_stride_ = kInf;
    if (!(stride_ > 0.0)) return;
    while (true) {
      const double p = t0_ + static_cast<double>(k_) * stride_;
      if (p > t1_) return;
      if (p <= t0_) {
        ++k_;
        continue;
      }
      if (windows_.empty()) {
        next_stride_ = p;
        return;
      }
      while (wi_ < windows_.size() && windows_[wi_].second < p) ++wi_;
      if (wi_ == windows_.size()) return;
      if (p >= windows_[wi_].first) {
        next_stride_ = p;
        return;
      }
      k_ = static_cast<long>(std::ceil((windows_[wi_].first - t0_) / stride_));
    }
  }

  double t0_, t1_, stride_;
  std::vector<std::pair<double, double>> windows_;
  std::vector<double> extra_;
  std::size_t ei_ = 0, wi_ = 0;
  long k_ = 1;
  double next_stride_ = kInf;
};

struct PruferSystem {
  const PotentialSpec* spec;
  double E;
  void operator()(double xi, const dop853::State<2>& y, dop853::State<2>& dy) const {
    const double V = effective_potential(*spec, xi, E);
    const double th = xi + y[1];
    const double s = std::sin(th);
    dy[0] = V * s * std::cos(th);
    dy[1] = -V * s * s;
  }
};

struct PairSystem {
  const PotentialSpec* spec;
  double E;
  void operator()(double xi, const dop853::State<4>& y, dop853::State<4>& dy) const {
    const double V = effective_potential(*spec, xi, E);
    for (int j = 0; j < 2; ++j) {
      const double th = xi + y[2 * j + 1];
      const double s = std::sin(th);
      dy[2 * j] = V * s * std::cos(th);
      dy[2 * j + 1] = -V * s * s;
    }
  }
};

struct ModifiedSystem {
  const PotentialSpec* spec;
  double E;
  void operator()(double xi, const dop853::State<2>& y, dop853::State<2>& dy) const {
    const double V = effective_potential(*spec, xi, E);
    const double dV = effective_potential_derivative(*spec, xi, E);
    const auto r = modified_prufer_rhs(xi + y[1], V, dV);
    dy[0] = r.dlogR;
    dy[1] = r.dtheta - 1.0;
  }
};

struct DirectSystem {
  const PotentialSpec* spec;
  double E;
  void operator()(double x, const dop853::State<2>& y, dop853::State<2>& dy) const {
    dy[0] = y[1];
    dy[1] = (eval_potential(*spec, x) - x - E) * y[0];
  }
};

void check_range(double xi0, double xi1) {
  if (!(xi0 >= 1.0)) throw DomainError("Pruefer integration needs xi0 >= 1");
  if (!(xi1 > xi0) || !std::isfinite(xi1)) throw DomainError("Pruefer integration needs xi1 > xi0");
}

// Run `system` from t0 to t1 and feed every scheduled capture to `sink`.
template <std::size_t N, class System, class Sink>
dop853::Stats drive(System system, double t0, dop853::State<N>& y, double t1, const IntegrationConfig& cfg,
                    CaptureSchedule& schedule, Sink&& sink) {
  auto integ = dop853::make_integrator<N>(system, cfg.options());
  integ.integrate(t0, y, t1, [&](const auto& step) {
    while (schedule.peek() <= step.t1) {
      const double p = schedule.peek();
      sink(p, step.at(p));
      schedule.pop();
    }
  });
  return integ.stats();
}

}  // namespace

std::pair<double, double> Trajectory::phi_at(std::size_t i) const {
  if (kind == TrajectoryKind::prufer) return phi_from_prufer(prufer.at(i));
  return phi_state_of_u(x.at(i), direct.at(i)[0], direct.at(i)[1]);
}

std::pair<double, double> Trajectory::u_at(std::size_t i) const {
  if (kind == TrajectoryKind::direct) return {direct.at(i)[0], direct.at(i)[1]};
  const auto [p, dp] = phi_from_prufer(prufer.at(i));
  return u_state_of_phi(xi.at(i), p, dp);
}

PruferState integrate_prufer_observed(const PotentialSpec& spec, double E, double xi0, double xi1,
                                      PruferState start, const IntegrationConfig& cfg,
                                      const PruferObserver& observe, std::vector<double> extra_points,
                                      dop853::Stats* stats) {
  cfg.validate();
  check_range(xi0, xi1);
  CaptureSchedule schedule(xi0, xi1, cfg.stride, cfg.capture_windows, std::move(extra_points));
  dop853::State<2> y{start.logR, start.theta - xi0};
  auto st = drive<2>(PruferSystem{&spec, E}, xi0, y, xi1, cfg, schedule, [&](double p, const dop853::State<2>& s) {
    if (observe) observe(p, PruferState{s[0], p + s[1]});
  });
  if (stats) *stats = st;
  return {y[0], xi1 + y[1]};
}

Trajectory integrate_prufer(std::shared_ptr<const PotentialSpec> spec, double E, double xi0, double xi1,
                            double beta, const IntegrationConfig& cfg, std::vector<double> extra_points) {
  if (!spec) throw std::invalid_argument("integrate_prufer: null spec");
  Trajectory t;
  t.kind = TrajectoryKind::prufer;
  t.E = E;
  t.beta = beta;
  t.spec = spec;
  const PruferState start{0.0, beta};
  const bool in_window =
      cfg.capture_windows.empty() || std::any_of(cfg.capture_windows.begin(), cfg.capture_windows.end(),
                                                 [&](const auto& w) { return xi0 >= w.first && xi0 <= w.second; });
  if (in_window) {
    t.xi.push_back(xi0);
    t.x.push_back(x_of_xi(xi0));
    t.prufer.push_back(start);
  }
  integrate_prufer_observed(
      *spec, E, xi0, xi1, start, cfg,
      [&](double xi, const PruferState& s) {
        t.xi.push_back(xi);
        t.x.push_back(x_of_xi(xi));
        t.prufer.push_back(s);
      },
      std::move(extra_points), &t.stats);
  return t;
}

Trajectory integrate_prufer(const PotentialSpec& spec, double E, double xi0, double xi1, double beta,
                            const IntegrationConfig& cfg, std::vector<double> extra_points) {
  return integrate_prufer(std::make_shared<const PotentialSpec>(spec), E, xi0, xi1, beta, cfg,
                          std::move(extra_points));
}

ModifiedTrajectory integrate_modified_prufer(const PotentialSpec& spec, double E, double xi0, double xi1,
                                             double beta, const IntegrationConfig& cfg,
                                             std::vector<double> extra_points) {
  cfg.validate();
  check_range(xi0, xi1);
  ModifiedTrajectory t;
  t.E = E;
  t.beta = beta;
  const auto start = modified_from_phi(std::sin(beta), std::cos(beta), effective_potential(spec, xi0, E));
  t.xi.push_back(xi0);
  t.states.push_back(start);
  CaptureSchedule schedule(xi0, xi1, cfg.stride, cfg.capture_windows, std::move(extra_points));
  dop853::State<2> y{start.logR, start.theta - xi0};
  drive<2>(ModifiedSystem{&spec, E}, xi0, y, xi1, cfg, schedule, [&](double p, const dop853::State<2>& s) {
    t.xi.push_back(p);
    t.states.push_back({s[0], p + s[1]});
  });
  return t;
}

Trajectory integrate_direct(std::shared_ptr<const PotentialSpec> spec, double E, double x0, double x1,
                            std::array<double, 2> init, const IntegrationConfig& cfg,
                            std::vector<double> extra_points) {
  if (!spec) throw std::invalid_argument("integrate_direct: null spec");
  cfg.validate();
  if (!(x0 > 0.0) || !(x1 > x0) || !std::isfinite(x1)) throw DomainError("integrate_direct: need 0 < x0 < x1");
  Trajectory t;
  t.kind = TrajectoryKind::direct;
  t.E = E;
  t.spec = spec;
  t.beta = std::atan2(init[0], init[1]);
  // Stride points are laid out in xi and mapped to x.
  const double xi0 = xi_of_x(x0), xi1 = xi_of_x(x1);
  std::vector<double> points;
  if (cfg.stride > 0.0) {
    CaptureSchedule xs(xi0, xi1, cfg.stride, cfg.capture_windows, {});
    for (double p = xs.peek(); p < xi1; xs.pop(), p = xs.peek()) points.push_back(x_of_xi(p));
  }
  for (double e : extra_points) points.push_back(e);
  t.xi.push_back(xi0);
  t.x.push_back(x0);
  t.direct.push_back(init);
  CaptureSchedule schedule(x0, x1, 0.0, {}, std::move(points));
  dop853::State<2> y{init[0], init[1]};
  t.stats = drive<2>(DirectSystem{spec.get(), E}, x0, y, x1, cfg, schedule, [&](double p, const dop853::State<2>& s) {
    t.xi.push_back(xi_of_x(p));
    t.x.push_back(p);
    t.direct.push_back({s[0], s[1]});
  });
  return t;
}

Trajectory integrate_direct(const PotentialSpec& spec, double E, double x0, double x1, std::array<double, 2> init,
                            const IntegrationConfig& cfg, std::vector<double> extra_points) {
  return integrate_direct(std::make_shared<const PotentialSpec>(spec), E, x0, x1, init, cfg,
                          std::move(extra_points));
}

std::vector<double> wronskian(const Trajectory& t1, const Trajectory& t2) {
  if (t1.E != t2.E) throw IncompatibleError("wronskian: trajectories have different energies");
  if (t1.spec != t2.spec && (!t1.spec || !t2.spec || describe(*t1.spec) != describe(*t2.spec)))
    throw IncompatibleError("wronskian: trajectories have different potentials");
  if (t1.size() != t2.size()) throw IncompatibleError("wronskian: grids differ in length");
  std::vector<double> w(t1.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    if (std::abs(t1.xi[i] - t2.xi[i]) > 1e-12 * std::max(1.0, std::abs(t1.xi[i])))
      throw IncompatibleError("wronskian: grids differ at index " + std::to_string(i));
    if (t1.kind == TrajectoryKind::prufer && t2.kind == TrajectoryKind::prufer) {
      const auto& a = t1.prufer[i];
      const auto& b = t2.prufer[i];
      w[i] = std::exp(a.logR + b.logR) * std::sin(a.theta - b.theta);
    } else {
      const auto [p1, dp1] = t1.phi_at(i);
      const auto [p2, dp2] = t2.phi_at(i);
      w[i] = p1 * dp2 - dp1 * p2;
    }
  }
  return w;
}

double relative_drift(const std::vector<double>& w) {
  if (w.empty()) return 0.0;
  const double ref = std::abs(w.front());
  double worst = 0.0;
  for (double v : w) worst = std::max(worst, std::abs(v - w.front()));
  return ref > 0.0 ? worst / ref : worst;
}

// ---------------------------------------------------------------- pair runs

std::pair<double, double> PairState::phi(double beta) const {
  const auto [a, da] = phi_from_prufer(half_pi);
  const auto [b, db] = phi_from_prufer(zero);
  const double s = std::sin(beta), c = std::cos(beta);
  return {s * a + c * b, s * da + c * db};
}

double PairState::logR(double beta) const {
  const double m = std::max(zero.logR, half_pi.logR);
  const double ea = std::exp(half_pi.logR - m), eb = std::exp(zero.logR - m);
  const double s = std::sin(beta), c = std::cos(beta);
  const double p = s * ea * std::sin(half_pi.theta) + c * eb * std::sin(zero.theta);
  const double dp = s * ea * std::cos(half_pi.theta) + c * eb * std::cos(zero.theta);
  return m + 0.5 * std::log(p * p + dp * dp);
}

double MomentSample::l2(double beta) const {
  const double s = std::sin(beta), c = std::cos(beta);
  // index 0 is the beta = 0 solution, index 1 the beta = pi/2 solution
  return c * c * m00 + 2.0 * s * c * m01 + s * s * m11;
}

PairRun integrate_pair(const PotentialSpec& spec, double E, double xi0, double xi1, const IntegrationConfig& cfg,
                       const PairRunOptions& options) {
  cfg.validate();
  check_range(xi0, xi1);
  PairRun run;
  std::vector<double> extra = options.record_xi;
  std::vector<double> L_xi;
  const double x0 = x_of_xi(xi0);
  for (double L : options.record_L) {
    if (L < x0) throw DomainError("integrate_pair: L grid starts before the trajectory");
    L_xi.push_back(xi_of_x(L));
  }
  std::sort(L_xi.begin(), L_xi.end());
  extra.insert(extra.end(), L_xi.begin(), L_xi.end());
  auto record_xi = options.record_xi;
  std::sort(record_xi.begin(), record_xi.end());

  std::size_t ri = 0, li = 0;
  while (ri < record_xi.size() && record_xi[ri] <= xi0) {
    if (record_xi[ri] == xi0) {
      run.record_xi.push_back(xi0);
      run.recorded.push_back({{0.0, 0.0}, {0.0, kPi / 2}});
    }
    ++ri;
  }
  double m[3] = {0.0, 0.0, 0.0};
  double last_xi = xi0;
  double last_f[3] = {0.0, 0.0, 1.0 / x0};  // phi_0 = 0, phi_1 = 1 at xi0
  while (li < L_xi.size() && L_xi[li] <= xi0) {
    run.moments.push_back({x0, 0.0, 0.0, 0.0});
    ++li;
  }

  CaptureSchedule schedule(xi0, xi1, cfg.stride, cfg.capture_windows, std::move(extra));
  dop853::State<4> y{0.0, 0.0 - xi0, 0.0, kPi / 2 - xi0};
  run.stats = drive<4>(PairSystem{&spec, E}, xi0, y, xi1, cfg, schedule, [&](double p, const dop853::State<4>& s) {
    const double x = x_of_xi(p);
    const double r0 = std::exp(s[0]), r1 = std::exp(s[2]);
    const double f0 = r0 * std::sin(p + s[1]), f1 = r1 * std::sin(p + s[3]);
    const double f[3] = {f0 * f0 / x, f0 * f1 / x, f1 * f1 / x};
    const double h = p - last_xi;
    for (int j = 0; j < 3; ++j) m[j] += 0.5 * h * (f[j] + last_f[j]);
    std::copy(f, f + 3, last_f);
    last_xi = p;
    const PairState ps{{s[0], p + s[1]}, {s[2], p + s[3]}};
    while (ri < record_xi.size() && record_xi[ri] <= p) {
      if (record_xi[ri] == p) {
        run.record_xi.push_back(p);
        run.recorded.push_back(ps);
      }
      ++ri;
    }
    while (li < L_xi.size() && L_xi[li] <= p) {
      run.moments.push_back({x, m[0], m[1], m[2]});
      ++li;
    }
  });
  run.final_state = {{y[0], xi1 + y[1]}, {y[2], xi1 + y[3]}};
  return run;
}

// ---------------------------------------------------------------- L2 growth

void L2Accumulator::add(double xi, double phi) {
  const double x = x_of_xi(xi);
  const double f = phi * phi / x;
  if (started_) total_ += 0.5 * (xi - last_xi_) * (f + last_f_);
  started_ = true;
  last_xi_ = xi;
  last_f_ = f;
  last_x_ = x;
}

std::vector<double> log_grid(double a, double b, int per_decade) {
  if (!(a > 0.0) || !(b > a) || per_decade < 1) throw DomainError("log_grid: need 0 < a < b");
  const double la = std::log10(a), lb = std::log10(b);
  const int n = std::max(2, static_cast<int>(std::ceil((lb - la) * per_decade)) + 1);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, la + (lb - la) * i / (n - 1));
  out.front() = a;
  out.back() = b;
  return out;
}

GrowthFit fit_growth(std::vector<double> L, const std::vector<double>& cumulative) {
  if (L.size() != cumulative.size() || L.empty()) throw FitError("fit_growth: size mismatch");
  GrowthFit g;
  g.L = std::move(L);
  g.log_values.resize(cumulative.size());
  for (std::size_t i = 0; i < cumulative.size(); ++i)
    g.log_values[i] = cumulative[i] > 0.0 ? std::log(cumulative[i]) : -std::numeric_limits<double>::infinity();
  const double Lmax = *std::max_element(g.L.begin(), g.L.end());
  g.fit_L_max = Lmax;
  g.fit_L_min = Lmax / 100.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < g.L.size(); ++i) {
    if (g.L[i] < g.fit_L_min * (1 - 1e-12) || !std::isfinite(g.log_values[i])) continue;
    const double lx = std::log(g.L[i]), ly = g.log_values[i];
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 3) throw FitError("fit_growth: fewer than 3 usable points in the top two decades");
  const double den = n * sxx - sx * sx;
  if (!(den > 0.0)) throw FitError("fit_growth: degenerate L grid");
  g.exponent = (n * sxy - sx * sy) / den;
  g.intercept = (sy - g.exponent * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < g.L.size(); ++i) {
    if (g.L[i] < g.fit_L_min * (1 - 1e-12) || !std::isfinite(g.log_values[i])) continue;
    const double r = g.log_values[i] - (g.intercept + g.exponent * std::log(g.L[i]));
    ss += r * r;
  }
  g.residual = std::sqrt(ss / n);
  return g;
}

GrowthFit l2_growth(const Trajectory& traj, const std::vector<double>& L_grid) {
  if (traj.size() < 2) throw ResolutionError("l2_growth: trajectory has fewer than 2 captures");
  if (L_grid.empty()) throw std::invalid_argument("l2_growth: empty L grid");
  std::vector<double> L = L_grid;
  std::sort(L.begin(), L.end());
  if (L.back() > traj.x.back() * (1 + 1e-12)) throw DomainError("l2_growth: L grid extends past the trajectory");
  // resolution: at least 10 captures per decade of x over the fitted range
  const double lo = std::max(traj.x.front(), L.back() / 100.0);
  for (double a = lo; a < L.back() * (1 - 1e-12); a *= 10.0) {
    const double b = std::min(a * 10.0, L.back());
    const auto cnt = std::count_if(traj.x.begin(), traj.x.end(), [&](double v) { return v >= a && v <= b; });
    const double frac = std::log10(b / a);
    if (cnt < 10.0 * frac) throw ResolutionError("l2_growth: fewer than 10 captures per decade");
  }
  std::vector<double> cum(traj.size(), 0.0);
  auto integrand = [&](std::size_t i) {
    if (traj.kind == TrajectoryKind::direct) return traj.direct[i][0] * traj.direct[i][0];
    const auto [p, dp] = traj.phi_at(i);
    return p * p / traj.x[i];
  };
  double prev = integrand(0);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double f = integrand(i);
    const double h = traj.kind == TrajectoryKind::direct ? traj.x[i] - traj.x[i - 1] : traj.xi[i] - traj.xi[i - 1];
    cum[i] = cum[i - 1] + 0.5 * h * (f + prev);
    prev = f;
  }
  std::vector<double> values;
  for (double Lv : L) {
    auto it = std::lower_bound(traj.x.begin(), traj.x.end(), Lv);
    if (it == traj.x.end()) it = std::prev(traj.x.end());
    const std::size_t j = static_cast<std::size_t>(it - traj.x.begin());
    if (j == 0 || *it == Lv) {
      values.push_back(cum[j]);
      continue;
    }
    const double w = (Lv - traj.x[j - 1]) / (traj.x[j] - traj.x[j - 1]);
    values.push_back(cum[j - 1] + w * (cum[j] - cum[j - 1]));
  }
  return fit_growth(std::move(L), values);
}

// ---------------------------------------------------------------- boundary condition search

double minimal_growth_bc_closed_form(const PairState& s) {
  const double m = std::max(s.zero.logR, s.half_pi.logR);
  const double ea = std::exp(s.half_pi.logR - m), eb = std::exp(s.zero.logR - m);
  const double a0 = ea * std::sin(s.half_pi.theta), a1 = ea * std::cos(s.half_pi.theta);
  const double b0 = eb * std::sin(s.zero.theta), b1 = eb * std::cos(s.zero.theta);
  const double A = a0 * a0 + a1 * a1, B = a0 * b0 + a1 * b1, C = b0 * b0 + b1 * b1;
  double beta = 0.5 * std::atan2(-2.0 * B, A - C);
  beta = std::fmod(beta, kPi);
  if (beta < 0.0) beta += kPi;
  return beta;
}

BcSearchResult minimal_growth_bc(const PairState& s) {
  BcSearchResult r;
  r.final_state = s;
  constexpr int kScan = 64;
  int best = 0;
  for (int j = 0; j < kScan; ++j) {
    const double b = kPi * j / kScan;
    r.scan_beta.push_back(b);
    r.scan_logR.push_back(s.logR(b));
    if (r.scan_logR.back() < r.scan_logR[static_cast<std::size_t>(best)]) best = j;
  }
  const auto [mn, mx] = std::minmax_element(r.scan_logR.begin(), r.scan_logR.end());
  r.logR_min = *mn;
  if (*mx - *mn < 0.1) {
    r.distinguished = false;
    r.logR_orthogonal = s.logR(r.scan_beta[static_cast<std::size_t>(best)] + kPi / 2);
    return r;
  }
  // golden section on the bracketing neighbours; periodicity keeps it valid
  double a = kPi * (best - 1) / kScan, b = kPi * (best + 1) / kScan;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = s.logR(c), fd = s.logR(d);
  while (b - a > 1e-4) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = s.logR(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = s.logR(d);
    }
  }
  double beta = 0.5 * (a + b);
  beta = std::fmod(beta, kPi);
  if (beta < 0.0) beta += kPi;
  r.distinguished = true;
  r.beta_star = beta;
  r.logR_min = s.logR(beta);
  r.logR_orthogonal = s.logR(beta + kPi / 2);
  return r;
}

BcSearchResult find_minimal_growth_bc(const PotentialSpec& spec, double E, double xi_max,
                                      const IntegrationConfig& cfg) {
  if (!(xi_max >= 1e3)) throw DomainError("find_minimal_growth_bc: xi_max must be >= 1e3");
  IntegrationConfig c = cfg;
  c.stride = 0.0;
  const auto run = integrate_pair(spec, E, 1.0, xi_max, c);
  return minimal_growth_bc(run.final_state);
}

// ---------------------------------------------------------------- export

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  if (traj.kind == TrajectoryKind::prufer)
    out << "xi,x,logR,theta\n";
  else
    out << "xi,x,u,du\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    double a, b;
    if (traj.kind == TrajectoryKind::prufer) {
      a = traj.prufer[i].logR;
      b = traj.prufer[i].theta;
    } else {
      a = traj.direct[i][0];
      b = traj.direct[i][1];
    }
    out << fmt17(traj.xi[i]) << ',' << fmt17(traj.x[i]) << ',' << fmt17(a) << ',' << fmt17(b) << '\n';
  }
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trajectory_csv(traj, out);
}

namespace {

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw std::runtime_error("binary trajectory: truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

constexpr char kMagic[8] = {'S', 'T', 'K', 'T', 'R', 'A', 'J', '1'};

}  // namespace

void write_trajectory_binary(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, 8);
  put_le<std::uint64_t>(out, traj.size());
  put_le<double>(out, traj.E);
  put_le<double>(out, traj.beta);
  put_le<std::uint32_t>(out, traj.kind == TrajectoryKind::prufer ? 0u : 1u);
  put_le<std::uint32_t>(out, 4u);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    put_le(out, traj.xi[i]);
    put_le(out, traj.x[i]);
    if (traj.kind == TrajectoryKind::prufer) {
      put_le(out, traj.prufer[i].logR);
      put_le(out, traj.prufer[i].theta);
    } else {
      put_le(out, traj.direct[i][0]);
      put_le(out, traj.direct[i][1]);
    }
  }
}

Trajectory read_trajectory_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("binary trajectory: bad magic in " + path.string());
  Trajectory t;
  const auto n = get_le<std::uint64_t>(in);
  t.E = get_le<double>(in);
  t.beta = get_le<double>(in);
  const auto kind = get_le<std::uint32_t>(in);
  const auto cols = get_le<std::uint32_t>(in);
  if (kind > 1 || cols != 4) throw std::runtime_error("binary trajectory: unsupported layout");
  t.kind = kind == 0 ? TrajectoryKind::prufer : TrajectoryKind::direct;
  for (std::uint64_t i = 0; i < n; ++i) {
    t.xi.push_back(get_le<double>(in));
    t.x.push_back(get_le<double>(in));
    const double a = get_le<double>(in), b = get_le<double>(in);
    if (t.kind == TrajectoryKind::prufer)
      t.prufer.push_back({a, b});
    else
      t.direct.push_back({a, b});
  }
  return t;
}

}  // namespace starklab
