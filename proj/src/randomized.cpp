#include "starklab/randomized.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "starklab/constants.hpp"
#include "starklab/counter_rng.hpp"
#include "starklab/errors.hpp"
#include "starklab/parallel.hpp"

namespace starklab {

double fourier_argument(double E, ArgumentReading reading) {
  return reading == ArgumentReading::liouville_c ? 3.0 * E / kLiouvilleC : 3.0 * E;
}

double lyapunov_theoretical(const BumpFunction& f, double E, double kappa, ArgumentReading reading) {
  return kappa * 3.0 * kPi / 8.0 * std::norm(bump_fourier(f, fourier_argument(E, reading)));
}

double expected_increment(const BumpFunction& f, double E, long n, double kappa, ArgumentReading reading) {
  if (n < 1) throw DomainError("expected_increment: n must be >= 1");
  return kappa * 9.0 * kPi / (8.0 * static_cast<double>(n)) * std::norm(bump_fourier(f, fourier_argument(E, reading)));
}

double increment_envelope(const BumpFunction& f, double E, long n) {
  if (n < 1) throw DomainError("increment_envelope: n must be >= 1");
  const double dn = static_cast<double>(n);
  const double random_part = 1.5 * f.abs_integral() / std::sqrt(dn);
  const double centrifugal = 5.0 / 36.0 * (1.0 / (dn * dn * dn) - 1.0 / ((dn + 1) * (dn + 1) * (dn + 1)));
  return random_part + 0.5 * (centrifugal + 3.0 * std::abs(E) / kLiouvilleC);
}

void EnsembleConfig::validate() const {
  if (realizations < 1) throw std::invalid_argument("realizations: must be >= 1");
  if (antithetic && realizations % 2 != 0)
    throw std::invalid_argument("realizations: must be even when antithetic pairing is on");
  if (n_min < 2) throw std::invalid_argument("n_min: must be >= 2");
  if (n_max < n_min) throw std::invalid_argument("n_max: must be >= n_min");
  if (energies.empty()) throw std::invalid_argument("energies: at least one energy required");
  for (double e : energies)
    if (!std::isfinite(e)) throw std::invalid_argument("energies: must be finite");
  if (bootstrap < 0) throw std::invalid_argument("bootstrap: must be >= 0");
  if (L_per_decade < 1) throw std::invalid_argument("L_per_decade: must be >= 1");
  integration.validate();
}

RandomBump EnsembleConfig::realization(const std::shared_ptr<const BumpFunction>& bump, long r) const {
  const auto unit = static_cast<std::uint64_t>(antithetic ? r / 2 : r);
  RandomBump spec = make_random_bump(bump, CounterRng(master_seed).derive(unit).key());
  if (antithetic && r % 2 == 1) spec.phase_shift = kPi;
  return spec;
}

double block_increment(const RandomBump& spec, double E, long n, double theta_n, const IntegrationConfig& cfg) {
  if (n < 1) throw DomainError("block_increment: n must be >= 1");
  IntegrationConfig c = cfg;
  c.stride = 0.0;
  const double dn = static_cast<double>(n);
  const PotentialSpec ps = spec;
  const auto end = integrate_prufer_observed(ps, E, dn * dn * dn, (dn + 1) * (dn + 1) * (dn + 1), {0.0, theta_n}, c, {});
  return end.logR;
}

namespace {

constexpr std::uint64_t kThetaStream = 0x7E7A;
constexpr std::uint64_t kBootstrapStream = 0xB007;

BlockIncrement one_block(const std::shared_ptr<const BumpFunction>& bump, double E, long n,
                         const EnsembleConfig& cfg, long r) {
  const RandomBump spec = cfg.realization(bump, r);
  double theta = cfg.theta0;
  if (cfg.random_theta) theta = kPi * CounterRng(spec.seed).derive(kThetaStream).uniform(static_cast<std::uint64_t>(n));
  return {n, block_increment(spec, E, n, theta, cfg.integration), theta, r};
}

template <class T, class F>
std::vector<T> run_tasks(long count, int jobs, F&& task) {
  std::vector<T> out(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  [[maybe_unused]] const int threads = resolve_jobs(jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long r = 0; r < count; ++r) {
    try {
      out[static_cast<std::size_t>(r)] = task(r);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (long r = 0; r < count; ++r) {
    if (!errors[static_cast<std::size_t>(r)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(r)]);
    } catch (const std::exception& e) {
      throw std::runtime_error("realization " + std::to_string(r) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<BlockIncrement> run_block_ensemble(const std::shared_ptr<const BumpFunction>& bump, double E, long n,
                                               const EnsembleConfig& cfg) {
  cfg.validate();
  return run_tasks<BlockIncrement>(cfg.realizations, cfg.jobs,
                                   [&](long r) { return one_block(bump, E, n, cfg, r); });
}

std::vector<BlockIncrement> serial::run_block_ensemble(const std::shared_ptr<const BumpFunction>& bump, double E,
                                                       long n, const EnsembleConfig& cfg) {
  cfg.validate();
  std::vector<BlockIncrement> out;
  for (long r = 0; r < cfg.realizations; ++r) out.push_back(one_block(bump, E, n, cfg, r));
  return out;
}

IncrementStats increment_stats(const std::vector<BlockIncrement>& inc, bool antithetic) {
  IncrementStats s;
  if (inc.empty()) return s;
  s.n = inc.front().n;
  std::vector<double> v;
  if (antithetic) {
    if (inc.size() % 2 != 0) throw std::invalid_argument("increment_stats: odd count with antithetic pairing");
    for (std::size_t i = 0; i + 1 < inc.size(); i += 2) v.push_back(0.5 * (inc[i].I + inc[i + 1].I));
  } else {
    for (const auto& b : inc) v.push_back(b.I);
  }
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double var_units = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
  s.mean = m;
  s.stderr_ = std::sqrt(var_units / static_cast<double>(v.size()));
  s.count = static_cast<long>(inc.size());
  s.paired = antithetic;
  double mi = 0.0;
  for (const auto& b : inc) mi += b.I;
  mi /= static_cast<double>(inc.size());
  double si = 0.0;
  for (const auto& b : inc) si += (b.I - mi) * (b.I - mi);
  s.variance = inc.size() > 1 ? si / static_cast<double>(inc.size() - 1) : 0.0;
  return s;
}

// ---------------------------------------------------------------- chains

ChainRealization run_chain(const RandomBump& spec, double E, const EnsembleConfig& cfg, long realization) {
  ChainRealization out;
  out.realization = realization;
  PairRunOptions opt;
  for (long n = cfg.n_min; n <= cfg.n_max + 1; ++n) {
    const double dn = static_cast<double>(n);
    opt.record_xi.push_back(dn * dn * dn);
  }
  const double dend = static_cast<double>(cfg.n_max + 1);
  const double xi_end = dend * dend * dend;
  opt.record_L = log_grid(kLiouvilleC, x_of_xi(xi_end), cfg.L_per_decade);
  IntegrationConfig ic = cfg.integration;
  const PotentialSpec ps = spec;
  const auto run = integrate_pair(ps, E, 1.0, xi_end, ic, opt);
  for (std::size_t i = 0; i < run.record_xi.size(); ++i) {
    out.n.push_back(cfg.n_min + static_cast<long>(i));
    out.logR.push_back(run.recorded[i].logR(cfg.beta));
  }
  for (std::size_t i = 0; i + 1 < out.logR.size(); ++i) out.increments.push_back(out.logR[i + 1] - out.logR[i]);
  out.bc = minimal_growth_bc(run.final_state);
  std::vector<double> L, generic, minimal;
  for (const auto& m : run.moments) {
    L.push_back(m.L);
    generic.push_back(m.l2(cfg.beta));
    if (out.bc.beta_star) minimal.push_back(m.l2(*out.bc.beta_star));
  }
  out.generic_growth = fit_growth(L, generic);
  if (out.bc.beta_star) out.minimal_growth = fit_growth(L, minimal);
  return out;
}

std::vector<ChainRealization> run_chain_ensemble(const std::shared_ptr<const BumpFunction>& bump, double E,
                                                 const EnsembleConfig& cfg) {
  cfg.validate();
  return run_tasks<ChainRealization>(cfg.realizations, cfg.jobs,
                                     [&](long r) { return run_chain(cfg.realization(bump, r), E, cfg, r); });
}

std::vector<ChainRealization> serial::run_chain_ensemble(const std::shared_ptr<const BumpFunction>& bump, double E,
                                                         const EnsembleConfig& cfg) {
  cfg.validate();
  std::vector<ChainRealization> out;
  for (long r = 0; r < cfg.realizations; ++r) out.push_back(run_chain(cfg.realization(bump, r), E, cfg, r));
  return out;
}

double lyapunov_slope(const std::vector<long>& n, const std::vector<double>& mean_logR, long fit_n_min,
                      long fit_n_max) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long cnt = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < fit_n_min || n[i] > fit_n_max) continue;
    const double lx = 3.0 * std::log(static_cast<double>(n[i]));
    sx += lx;
    sy += mean_logR[i];
    sxx += lx * lx;
    sxy += lx * mean_logR[i];
    ++cnt;
  }
  if (cnt < 10) throw InsufficientRangeError("lyapunov fit: fewer than 10 blocks in the window");
  const double c = static_cast<double>(cnt);
  return (c * sxy - sx * sy) / (c * sxx - sx * sx);
}

LyapunovEstimate estimate_lyapunov(const std::vector<ChainRealization>& chains, double E, long fit_n_min,
                                   long fit_n_max, int bootstrap, std::uint64_t seed, bool antithetic) {
  if (chains.empty()) throw InsufficientRangeError("estimate_lyapunov: no realizations");
  LyapunovEstimate est;
  est.E = E;
  est.fit_n_min = fit_n_min;
  est.fit_n_max = fit_n_max;
  est.n = chains.front().n;
  const std::size_t K = est.n.size();
  for (const auto& c : chains)
    if (c.n != est.n) throw IncompatibleError("estimate_lyapunov: realizations cover different blocks");
  // resampling units: antithetic pairs or single realizations
  const std::size_t unit = antithetic ? 2 : 1;
  if (chains.size() % unit != 0) throw std::invalid_argument("estimate_lyapunov: odd count with antithetic pairing");
  const std::size_t U = chains.size() / unit;
  std::vector<std::vector<double>> unit_curve(U, std::vector<double>(K, 0.0));
  for (std::size_t u = 0; u < U; ++u)
    for (std::size_t j = 0; j < unit; ++j)
      for (std::size_t k = 0; k < K; ++k) unit_curve[u][k] += chains[u * unit + j].logR[k] / static_cast<double>(unit);
  est.mean_logR.assign(K, 0.0);
  for (const auto& c : unit_curve)
    for (std::size_t k = 0; k < K; ++k) est.mean_logR[k] += c[k] / static_cast<double>(U);
  est.slope = lyapunov_slope(est.n, est.mean_logR, fit_n_min, fit_n_max);
  if (bootstrap > 0 && U > 1) {
    const CounterRng rng = CounterRng(seed).derive(kBootstrapStream);
    std::vector<double> slopes;
    std::vector<double> curve(K);
    for (int b = 0; b < bootstrap; ++b) {
      const CounterRng rb = rng.derive(static_cast<std::uint64_t>(b));
      std::fill(curve.begin(), curve.end(), 0.0);
      for (std::size_t i = 0; i < U; ++i) {
        const std::size_t pick = static_cast<std::size_t>(rb.bits(i) % U);
        for (std::size_t k = 0; k < K; ++k) curve[k] += unit_curve[pick][k] / static_cast<double>(U);
      }
      slopes.push_back(lyapunov_slope(est.n, curve, fit_n_min, fit_n_max));
    }
    double m = 0.0;
    for (double s : slopes) m += s;
    m /= static_cast<double>(slopes.size());
    double ss = 0.0;
    for (double s : slopes) ss += (s - m) * (s - m);
    est.stderr_ = std::sqrt(ss / static_cast<double>(slopes.size() - 1));
  }
  return est;
}

GrowthSummary growth_exponents(const std::vector<ChainRealization>& chains, double lambda) {
  GrowthSummary g;
  std::vector<double> gen, mini;
  for (const auto& c : chains) {
    if (c.generic_growth) gen.push_back(c.generic_growth->exponent);
    if (c.minimal_growth) mini.push_back(c.minimal_growth->exponent);
  }
  auto ms = [](const std::vector<double>& v, double& mean, double& se) {
    mean = se = 0.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  };
  ms(gen, g.generic_mean, g.generic_stderr);
  ms(mini, g.minimal_mean, g.minimal_stderr);
  g.minimal_count = static_cast<long>(mini.size());
  g.predicted_growing = 0.5 + 3.0 * lambda;
  g.predicted_decaying = std::max(0.0, 0.5 - 3.0 * lambda);
  return g;
}

DimensionReport dimension_report_from_lambda(const std::vector<double>& energies, const std::vector<double>& lambda,
                                             double kappa, double tol) {
  if (energies.size() != lambda.size()) throw std::invalid_argument("dimension_report: size mismatch");
  DimensionReport rep;
  rep.kappa = kappa;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    DimensionEntry e;
    e.E = energies[i];
    e.lambda = lambda[i];
    if (std::abs(e.lambda - 1.0 / 6.0) <= tol)
      e.boundary = true;
    else if (e.lambda < 1.0 / 6.0)
      e.d = 1.0 - 6.0 * e.lambda;
    else
      e.pure_point = true;
    rep.entries.push_back(e);
  }
  return rep;
}

DimensionReport dimension_report(const BumpFunction& f, const std::vector<double>& energies, double kappa,
                                 ArgumentReading reading, double tol) {
  std::vector<double> lambda;
  for (double E : energies) lambda.push_back(lyapunov_theoretical(f, E, kappa, reading));
  return dimension_report_from_lambda(energies, lambda, kappa, tol);
}

}  // namespace starklab
