#include "starklab/potentials.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

// pchip.hpp in Boost 1.74 calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "starklab/constants.hpp"
#include "starklab/counter_rng.hpp"
#include "starklab/errors.hpp"
#include "starklab/parallel.hpp"

namespace starklab {
namespace {

constexpr double kStandardBumpIntegral = 0.00702985840660965623924127053035;

template <class F>
double integrate_unit(F&& f) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 20, 1e-14);
}

// shortest round-trip form
std::string fmt(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite coordinate");
}

}  // namespace

// ---------------------------------------------------------------- BumpFunction

BumpFunction::BumpFunction(Sampler f, Sampler df, std::string label)
    : f_(std::move(f)), df_(std::move(df)), label_(std::move(label)) {
  if (!f_) throw std::invalid_argument("bump: empty sampler");
  bool nonzero = false;
  for (int i = 0; i <= 1024; ++i) {
    const double v = f_(i / 1024.0);
    if (!std::isfinite(v)) throw std::invalid_argument("bump: sampler is not finite on [0,1]");
    if (i > 0 && i < 1024 && v != 0.0) nonzero = true;
  }
  if (!nonzero) throw std::invalid_argument("bump: profile is identically zero");
  finalize();
}

void BumpFunction::finalize() {
  auto eval = [this](double t) { return (*this)(t); };
  integral_ = integrate_unit(eval);
  abs_integral_ = integrate_unit([&](double t) { return std::abs(eval(t)); });
  first_moment_ = integrate_unit([&](double t) { return t * eval(t); });
  sup_ = 0.0;
  for (int i = 1; i < 8192; ++i) sup_ = std::max(sup_, std::abs(eval(i / 8192.0)));

  using Rule = boost::math::quadrature::gauss<double, 64>;
  const auto& abscissa = Rule::abscissa();
  const auto& w = Rule::weights();
  nodes_.clear();
  weights_.clear();
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    nodes_.push_back(0.5 * (1.0 - abscissa[i]));
    weights_.push_back(0.5 * w[i]);
    if (abscissa[i] != 0.0) {
      nodes_.push_back(0.5 * (1.0 + abscissa[i]));
      weights_.push_back(0.5 * w[i]);
    }
  }
  std::vector<std::size_t> order(nodes_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return nodes_[a] < nodes_[b]; });
  std::vector<double> n2, w2;
  for (auto i : order) {
    n2.push_back(nodes_[i]);
    w2.push_back(weights_[i]);
  }
  nodes_ = std::move(n2);
  weights_ = std::move(w2);

  values_.resize(nodes_.size());
  derivs_.resize(nodes_.size());
  double rule_sum = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    values_[i] = eval(nodes_[i]);
    derivs_[i] = derivative(nodes_[i]);
    rule_sum += weights_[i] * values_[i];
  }
  if (integral_ != 0.0 && rule_sum != 0.0 && std::abs(integral_) > 1e-12 * abs_integral_) {
    const double fix = integral_ / rule_sum;
    for (auto& wi : weights_) wi *= fix;
  }
}

double BumpFunction::operator()(double t) const {
  if (!(t > 0.0 && t < 1.0)) return 0.0;
  return scale_ * f_(t);
}

double BumpFunction::derivative(double t) const {
  if (!(t > 0.0 && t < 1.0)) return 0.0;
  if (df_) return scale_ * df_(t);
  const double h = 1e-6;
  return ((*this)(t + h) - (*this)(t - h)) / (2.0 * h);
}

BumpFunction BumpFunction::scaled(double s) const {
  if (!std::isfinite(s)) throw std::invalid_argument("bump: non-finite scale");
  BumpFunction out = *this;
  out.scale_ = scale_ * s;
  out.integral_ *= s;
  out.abs_integral_ *= std::abs(s);
  out.sup_ *= std::abs(s);
  out.first_moment_ *= s;
  for (auto& v : out.values_) v *= s;
  for (auto& v : out.derivs_) v *= s;
  return out;
}

BumpFunction BumpFunction::standard(double scale) {
  auto f = [](double t) {
    if (!(t > 0.0 && t < 1.0)) return 0.0;
    return std::exp(-1.0 / (t * (1.0 - t)));
  };
  auto df = [f](double t) {
    if (!(t > 0.0 && t < 1.0)) return 0.0;
    const double u = t * (1.0 - t);
    return f(t) * (1.0 - 2.0 * t) / (u * u);
  };
  BumpFunction b(f, df, "standard");
  if (scale != 1.0) {
    b = b.scaled(scale);
  }
  return b;
}

BumpFunction BumpFunction::default_bump() {
  BumpFunction b = standard(1.0 / kStandardBumpIntegral);
  b.label_ = "default";
  return b;
}

BumpFunction BumpFunction::default_mollifier() {
  BumpFunction b = standard(1.0 / kStandardBumpIntegral);
  b.label_ = "mollifier";
  return b;
}

BumpFunction BumpFunction::from_table(std::vector<double> t, std::vector<double> f, std::string label) {
  if (t.size() != f.size() || t.size() < 4)
    throw std::invalid_argument("bump table: need at least 4 (t, f) rows of equal length");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("bump table: t must be strictly increasing");
  if (t.front() < 0.0 || t.back() > 1.0)
    throw std::invalid_argument("bump table: t must lie in [0, 1]");
  // Pin the support endpoints so the interpolant vanishes there.
  if (t.front() > 0.0) {
    t.insert(t.begin(), 0.0);
    f.insert(f.begin(), 0.0);
  }
  if (t.back() < 1.0) {
    t.push_back(1.0);
    f.push_back(0.0);
  }
  f.front() = 0.0;
  f.back() = 0.0;
  using boost::math::interpolators::pchip;
  auto spline = std::make_shared<pchip<std::vector<double>>>(std::move(t), std::move(f), 0.0, 0.0);
  auto sampler = [spline](double x) { return (*spline)(x); };
  auto dsampler = [spline](double x) { return spline->prime(x); };
  return BumpFunction(sampler, dsampler, std::move(label));
}

BumpFunction BumpFunction::load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("bump table: cannot open " + path.string());
  std::vector<double> t, f;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    double a, b;
    if (!(row >> a)) continue;
    if (!(row >> b))
      throw std::invalid_argument("bump table " + path.string() + ":" + std::to_string(lineno) +
                                  ": expected two columns");
    t.push_back(a);
    f.push_back(b);
  }
  return from_table(std::move(t), std::move(f), "table:" + path.filename().string());
}

std::complex<double> bump_fourier(const BumpFunction& f, double k) {
  using boost::math::quadrature::gauss_kronrod;
  const double re = gauss_kronrod<double, 61>::integrate(
      [&](double t) { return std::cos(k * t) * f(t); }, 0.0, 1.0, 25, 1e-14);
  const double im = gauss_kronrod<double, 61>::integrate(
      [&](double t) { return std::sin(k * t) * f(t); }, 0.0, 1.0, 25, 1e-14);
  return {re, im};
}

// ---------------------------------------------------------------- RandomBump

double RandomBump::phase(long n) const {
  if (phases && n >= 1 && static_cast<std::size_t>(n - 1) < phases->size())
    return (*phases)[static_cast<std::size_t>(n - 1)];
  return kTwoPi * CounterRng(seed).uniform(static_cast<std::uint64_t>(n));
}

RandomBump make_random_bump(std::uint64_t seed, double scale) {
  auto bump = std::make_shared<const BumpFunction>(
      scale == 1.0 ? BumpFunction::default_bump() : BumpFunction::default_bump().scaled(scale));
  return make_random_bump(std::move(bump), seed);
}

RandomBump make_random_bump(std::shared_ptr<const BumpFunction> bump, std::uint64_t seed) {
  RandomBump r;
  r.bump = std::move(bump);
  r.seed = seed;
  return r;
}

// ---------------------------------------------------------------- evaluation

namespace {

struct Describe {
  std::string operator()(const ZeroPotential&) const { return "zero"; }
  std::string operator()(const PowerDecay& p) const {
    return "power_decay(C=" + fmt(p.amplitude) + ",alpha=" + fmt(p.exponent) + ")";
  }
  std::string operator()(const AnalyticPotential& p) const {
    return "analytic(" + p.label + (p.dq ? ",with_derivative" : "") + ")";
  }
  std::string operator()(const WignerVonNeumannLike& p) const {
    return "wigner_von_neumann_like(C1=" + fmt(p.c1) + ",C2=" + fmt(p.c2) + ")";
  }
  std::string operator()(const RandomBump& p) const {
    std::string s = "random_bump(bump=" + (p.bump ? p.bump->label() : std::string("none")) +
                    ",scale=" + fmt(p.bump ? p.bump->scale() : 0.0) + ",seed=" + std::to_string(p.seed);
    if (p.phase_shift != 0.0) s += ",shift=" + fmt(p.phase_shift);
    if (p.phases) s += ",phase_table=" + std::to_string(p.phases->size());
    return s + ")";
  }
};

struct Name {
  std::string operator()(const ZeroPotential&) const { return "zero"; }
  std::string operator()(const PowerDecay&) const { return "power_decay"; }
  std::string operator()(const AnalyticPotential&) const { return "analytic"; }
  std::string operator()(const WignerVonNeumannLike&) const { return "wigner_von_neumann_like"; }
  std::string operator()(const RandomBump&) const { return "random_bump"; }
};

double random_bump_x(const RandomBump& p, double x) {
  if (x < 0.0) throw DomainError("random bump potential: x must be >= 0");
  const double s = std::sqrt(x / kLiouvilleC);
  const double n = std::floor(s);
  const double t = s - n;
  if (n < 1.0 || t <= 0.0) return 0.0;
  const long block = static_cast<long>(n);
  const double a = p.phase(block) + p.phase_shift;
  return kLiouvilleC / std::sqrt(n) * (*p.bump)(t) * std::sin(4.0 / 3.0 * x * std::sqrt(x) + a);
}

double random_bump_dx(const RandomBump& p, double x) {
  if (x < 0.0) throw DomainError("random bump potential: x must be >= 0");
  const double s = std::sqrt(x / kLiouvilleC);
  const double n = std::floor(s);
  const double t = s - n;
  if (n < 1.0 || t <= 0.0) return 0.0;
  const long block = static_cast<long>(n);
  const double arg = 4.0 / 3.0 * x * std::sqrt(x) + p.phase(block) + p.phase_shift;
  const double ds_dx = 0.5 / std::sqrt(kLiouvilleC * x);
  const double pref = kLiouvilleC / std::sqrt(n);
  return pref * (p.bump->derivative(t) * ds_dx * std::sin(arg) +
                 (*p.bump)(t) * 2.0 * std::sqrt(x) * std::cos(arg));
}

}  // namespace

void validate(const PotentialSpec& spec) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PowerDecay>) {
          if (!std::isfinite(p.amplitude)) throw std::invalid_argument("amplitude: must be finite");
          if (!std::isfinite(p.exponent) || p.exponent <= 0.0)
            throw std::invalid_argument("exponent: must be > 0");
        } else if constexpr (std::is_same_v<T, AnalyticPotential>) {
          if (!p.q) throw std::invalid_argument("q: analytic potential needs a sampler");
        } else if constexpr (std::is_same_v<T, WignerVonNeumannLike>) {
          if (!std::isfinite(p.c1) || !std::isfinite(p.c2))
            throw std::invalid_argument("c1/c2: must be finite");
        } else if constexpr (std::is_same_v<T, RandomBump>) {
          if (!p.bump) throw std::invalid_argument("bump: random potential needs a bump function");
          if (!std::isfinite(p.phase_shift)) throw std::invalid_argument("phase_shift: must be finite");
        }
      },
      spec);
}

std::string describe(const PotentialSpec& spec) { return std::visit(Describe{}, spec); }
std::string variant_name(const PotentialSpec& spec) { return std::visit(Name{}, spec); }

double eval_potential(const PotentialSpec& spec, double x) {
  require_finite(x, "eval_potential");
  return std::visit(
      [x](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ZeroPotential>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, PowerDecay>) {
          return p.amplitude * std::pow(1.0 + std::abs(x), -p.exponent);
        } else if constexpr (std::is_same_v<T, AnalyticPotential>) {
          return p.q(x);
        } else if constexpr (std::is_same_v<T, WignerVonNeumannLike>) {
          if (x <= 0.0) return 0.0;
          return p.c1 / std::sqrt(x) * std::sin(p.c2 * x * std::sqrt(x));
        } else {
          return random_bump_x(p, x);
        }
      },
      spec);
}

std::optional<double> eval_potential_derivative(const PotentialSpec& spec, double x) {
  require_finite(x, "eval_potential_derivative");
  return std::visit(
      [x](const auto& p) -> std::optional<double> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ZeroPotential>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, PowerDecay>) {
          const double sgn = x < 0.0 ? -1.0 : 1.0;
          return -sgn * p.exponent * p.amplitude * std::pow(1.0 + std::abs(x), -p.exponent - 1.0);
        } else if constexpr (std::is_same_v<T, AnalyticPotential>) {
          if (!p.dq) return std::nullopt;
          return p.dq(x);
        } else if constexpr (std::is_same_v<T, WignerVonNeumannLike>) {
          if (x <= 0.0) return 0.0;
          const double arg = p.c2 * x * std::sqrt(x);
          return p.c1 * (-0.5 / (x * std::sqrt(x)) * std::sin(arg) + 1.5 * p.c2 * std::cos(arg));
        } else {
          if (!p.bump->has_derivative()) return std::nullopt;
          return random_bump_dx(p, x);
        }
      },
      spec);
}

bool has_derivative(const PotentialSpec& spec) {
  if (const auto* a = std::get_if<AnalyticPotential>(&spec)) return static_cast<bool>(a->dq);
  if (const auto* r = std::get_if<RandomBump>(&spec)) return r->bump && r->bump->has_derivative();
  return true;
}

double eval_random_in_xi(const RandomBump& p, double xi) {
  if (!(xi >= 1.0)) throw DomainError("eval_random_in_xi: xi must be >= 1");
  return detail::random_in_xi(p, xi, std::cbrt(xi));
}

double detail::random_in_xi(const RandomBump& p, double xi, double s) {
  const double n = std::floor(s);
  const double t = s - n;
  if (t <= 0.0) return 0.0;
  const double a = p.phase(static_cast<long>(n)) + p.phase_shift;
  return (*p.bump)(t) * std::sin(2.0 * xi + a) / (std::sqrt(n) * s * s);
}

double eval_random_in_xi_derivative(const RandomBump& p, double xi) {
  if (!(xi >= 1.0)) throw DomainError("eval_random_in_xi_derivative: xi must be >= 1");
  const double s = std::cbrt(xi);
  const double n = std::floor(s);
  const double t = s - n;
  if (t <= 0.0) return 0.0;
  const double arg = 2.0 * xi + p.phase(static_cast<long>(n)) + p.phase_shift;
  const double f = (*p.bump)(t);
  const double df = p.bump->derivative(t);
  const double inv_s2 = 1.0 / (s * s);
  const double sn = std::sin(arg);
  const double cs = std::cos(arg);
  return (-2.0 / 3.0 * f * sn * inv_s2 / xi + df * sn * inv_s2 * inv_s2 / 3.0 + 2.0 * f * cs * inv_s2) /
         std::sqrt(n);
}

std::optional<long> active_block(double x) {
  if (!(x >= 0.0)) return std::nullopt;
  const double s = std::sqrt(x / kLiouvilleC);
  const double n = std::floor(s);
  if (n < 1.0 || s - n <= 0.0) return std::nullopt;
  return static_cast<long>(n);
}

// ---------------------------------------------------------------- smoothness

namespace {

struct SmoothnessGrid {
  std::vector<double> x;
  std::vector<double> offsets;  // positive, < 1
  std::vector<double> eps;
};

SmoothnessGrid build_grid(const SmoothnessOptions& o) {
  if (!(o.x_max > o.x_min) || !std::isfinite(o.x_min) || !std::isfinite(o.x_max))
    throw DomainError("smoothness_report: empty probe range");
  if (o.density < 1) throw DomainError("smoothness_report: density must be >= 1");
  if (!(o.alpha > 0.0 && o.alpha <= 1.0)) throw DomainError("smoothness_report: alpha must be in (0, 1]");
  if (o.eps_points < 2 || !(o.eps_min > 0.0 && o.eps_min < 1.0))
    throw DomainError("smoothness_report: invalid epsilon grid");
  SmoothnessGrid g;
  const long intervals = 1000L * o.density;
  g.x.resize(static_cast<std::size_t>(intervals + 1));
  for (long i = 0; i <= intervals; ++i)
    g.x[static_cast<std::size_t>(i)] = o.x_min + (o.x_max - o.x_min) * static_cast<double>(i) / intervals;
  // 10^{-j/(24 d)}, j = 1 .. 5*24*d: offsets in [1e-5, 1), nested under doubling of d.
  const int per_decade = 24 * o.density;
  for (int j = 1; j <= 5 * per_decade; ++j) g.offsets.push_back(std::pow(10.0, -static_cast<double>(j) / per_decade));
  const double lmin = std::log(o.eps_min);
  for (int k = 0; k < o.eps_points; ++k)
    g.eps.push_back(std::exp(lmin * (1.0 - static_cast<double>(k) / (o.eps_points - 1))));
  g.eps.back() = 1.0;
  return g;
}

double holder_at(const PotentialSpec& spec, double x, double alpha, const std::vector<double>& offsets) {
  const double qx = eval_potential(spec, x);
  double best = 0.0;
  for (double d : offsets) {
    const double scale = std::pow(d, -alpha);
    for (double y : {x - d, x + d}) {
      if (y < 0.0 && std::holds_alternative<RandomBump>(spec)) continue;
      best = std::max(best, std::abs(qx - eval_potential(spec, y)) * scale);
    }
  }
  return best;
}

double second_difference_sup(const PotentialSpec& spec, const std::vector<double>& xs, double e) {
  double best = 0.0;
  const bool half_line = std::holds_alternative<RandomBump>(spec);
  for (double x : xs) {
    if (half_line && x - e < 0.0) continue;
    const double v = eval_potential(spec, x + e) - 2.0 * eval_potential(spec, x) + eval_potential(spec, x - e);
    best = std::max(best, std::abs(v));
  }
  return best;
}

double derivative_for_dini(const PotentialSpec& spec, double x, double e, bool analytic) {
  if (analytic) return *eval_potential_derivative(spec, x);
  const double h = std::min(1e-6 * std::max(1.0, std::abs(x)), 0.1 * e);
  return (eval_potential(spec, x + h) - eval_potential(spec, x - h)) / (2.0 * h);
}

double derivative_difference_sup(const PotentialSpec& spec, const std::vector<double>& xs, double e,
                                 bool analytic) {
  double best = 0.0;
  const bool half_line = std::holds_alternative<RandomBump>(spec);
  for (double x : xs) {
    if (half_line && x - 2.0 * e < 0.0) continue;
    const double v = derivative_for_dini(spec, x + e, e, analytic) - derivative_for_dini(spec, x - e, e, analytic);
    best = std::max(best, std::abs(v));
  }
  return best;
}

// Trapezoid rule in u = log(eps): int g(eps) d eps / eps^p = int g e^{(1-p) u} du.
double log_grid_integral(const std::vector<double>& eps, const std::vector<double>& g, double power) {
  double acc = 0.0;
  for (std::size_t k = 1; k < eps.size(); ++k) {
    const double u0 = std::log(eps[k - 1]), u1 = std::log(eps[k]);
    const double a = g[k - 1] * std::pow(eps[k - 1], 1.0 - power);
    const double b = g[k] * std::pow(eps[k], 1.0 - power);
    acc += 0.5 * (a + b) * (u1 - u0);
  }
  return acc;
}

SmoothnessReport assemble(const SmoothnessOptions& o, SmoothnessGrid&& g, std::vector<double>&& holder,
                          const std::vector<double>& zyg, const std::vector<double>& dini, bool analytic) {
  SmoothnessReport r;
  r.alpha = o.alpha;
  r.holder_sup = 0.0;
  for (double h : holder) r.holder_sup = std::max(r.holder_sup, h);
  r.zygmund = log_grid_integral(g.eps, zyg, 2.0);
  r.dini = log_grid_integral(g.eps, dini, 1.0);
  r.dini_uses_derivative = analytic;
  r.x_min = o.x_min;
  r.x_max = o.x_max;
  r.probe_offsets = g.offsets.size();
  r.eps_min = o.eps_min;
  r.eps_points = o.eps_points;
  r.x = std::move(g.x);
  r.holder = std::move(holder);
  return r;
}

}  // namespace

namespace serial {

SmoothnessReport smoothness_report(const PotentialSpec& spec, const SmoothnessOptions& o) {
  SmoothnessGrid g = build_grid(o);
  const bool analytic = has_derivative(spec);
  std::vector<double> holder(g.x.size());
  for (std::size_t i = 0; i < g.x.size(); ++i) holder[i] = holder_at(spec, g.x[i], o.alpha, g.offsets);
  std::vector<double> zyg(g.eps.size()), dini(g.eps.size());
  for (std::size_t k = 0; k < g.eps.size(); ++k) {
    zyg[k] = second_difference_sup(spec, g.x, g.eps[k]);
    dini[k] = derivative_difference_sup(spec, g.x, g.eps[k], analytic);
  }
  return assemble(o, std::move(g), std::move(holder), zyg, dini, analytic);
}

}  // namespace serial

SmoothnessReport smoothness_report(const PotentialSpec& spec, const SmoothnessOptions& o) {
  SmoothnessGrid g = build_grid(o);
  const bool analytic = has_derivative(spec);
  const long nx = static_cast<long>(g.x.size());
  const long ne = static_cast<long>(g.eps.size());
  std::vector<double> holder(g.x.size());
  std::vector<double> zyg(g.eps.size()), dini(g.eps.size());
  [[maybe_unused]] const int jobs = resolve_jobs(o.jobs);
#pragma omp parallel num_threads(jobs)
  {
#pragma omp for schedule(static)
    for (long i = 0; i < nx; ++i) holder[i] = holder_at(spec, g.x[i], o.alpha, g.offsets);
#pragma omp for schedule(dynamic, 4)
    for (long k = 0; k < ne; ++k) {
      zyg[k] = second_difference_sup(spec, g.x, g.eps[k]);
      dini[k] = derivative_difference_sup(spec, g.x, g.eps[k], analytic);
    }
  }
  return assemble(o, std::move(g), std::move(holder), zyg, dini, analytic);
}

}  // namespace starklab
