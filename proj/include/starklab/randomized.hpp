#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "starklab/integrator.hpp"
#include "starklab/potentials.hpp"

namespace starklab {

/// Which constant divides 3E in the Fourier argument of the closed form.
enum class ArgumentReading {
  liouville_c,  // 3E / c with c = (3/2)^{2/3}
  unit          // 3E (the capital C read as 1)
};

double fourier_argument(double E, ArgumentReading reading = ArgumentReading::liouville_c);

/// kappa (3 pi / 8) |f^(3E/C)|^2. kappa = 1 is the published normalization.
double lyapunov_theoretical(const BumpFunction& f, double E, double kappa = 1.0,
                            ArgumentReading reading = ArgumentReading::liouville_c);

/// kappa (9 pi / (8 n)) |f^(3E/C)|^2, the leading mean of I_n.
double expected_increment(const BumpFunction& f, double E, long n, double kappa = 1.0,
                          ArgumentReading reading = ArgumentReading::liouville_c);

/// Normalization that follows from the uniform law on the phases.
inline constexpr double kDerivedKappa = 0.07957747154594766788;  // 1 / (4 pi)

/// Rigorous bound on |I_n|: (1/2) int |V| over the block, i.e.
/// (3/2) n^{-1/2} int |f| plus the deterministic part of V.
double increment_envelope(const BumpFunction& f, double E, long n);

struct EnsembleConfig {
  long realizations = 200;  // M
  long n_min = 10;
  long n_max = 60;
  std::vector<double> energies{0.0};
  std::uint64_t master_seed = 0;
  IntegrationConfig integration;
  int jobs = 0;
  /// Pair realization 2k+1 with 2k through a_n -> a_n + pi (q -> -q).
  bool antithetic = true;
  /// Single-block runs: draw theta_n uniformly in [0, pi) per realization
  /// instead of using `theta0`.
  bool random_theta = true;
  double theta0 = 0.0;
  /// Chain runs: initial direction at xi = 1.
  double beta = 0.0;
  int bootstrap = 500;
  /// Points per decade of the L grid for growth fits.
  int L_per_decade = 20;

  void validate() const;
  /// Random-bump spec of realization r (phases keyed by (master_seed, r)).
  RandomBump realization(const std::shared_ptr<const BumpFunction>& bump, long r) const;
};

struct BlockIncrement {
  long n = 0;
  double I = 0.0;
  double theta_start = 0.0;
  long realization = 0;
};

/// One integration of block [n^3, (n+1)^3] per realization from
/// (logR, theta) = (0, theta_n).
std::vector<BlockIncrement> run_block_ensemble(const std::shared_ptr<const BumpFunction>& bump, double E, long n,
                                               const EnsembleConfig& cfg);
namespace serial {
std::vector<BlockIncrement> run_block_ensemble(const std::shared_ptr<const BumpFunction>& bump, double E, long n,
                                               const EnsembleConfig& cfg);
}

/// Single block increment for an explicit spec and incoming phase.
double block_increment(const RandomBump& spec, double E, long n, double theta_n, const IntegrationConfig& cfg);

struct IncrementStats {
  long n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double variance = 0.0;  // per-realization sample variance
  long count = 0;
  bool paired = false;
};

/// Mean and standard error; antithetic pairs are averaged first.
IncrementStats increment_stats(const std::vector<BlockIncrement>& inc, bool antithetic);

/// Per-realization chain: blocks integrated consecutively from xi = 1 with
/// the pair system; logR(n^3) of the configured direction, the minimal
/// growth direction at the end, and L2 growth fits for both.
struct ChainRealization {
  long realization = 0;
  std::vector<long> n;
  std::vector<double> logR;         // at n^3, direction cfg.beta
  std::vector<double> increments;   // logR((n+1)^3) - logR(n^3)
  BcSearchResult bc;
  std::optional<GrowthFit> generic_growth;
  std::optional<GrowthFit> minimal_growth;
};

std::vector<ChainRealization> run_chain_ensemble(const std::shared_ptr<const BumpFunction>& bump, double E,
                                                 const EnsembleConfig& cfg);
namespace serial {
std::vector<ChainRealization> run_chain_ensemble(const std::shared_ptr<const BumpFunction>& bump, double E,
                                                 const EnsembleConfig& cfg);
}

ChainRealization run_chain(const RandomBump& spec, double E, const EnsembleConfig& cfg, long realization);

struct LyapunovEstimate {
  double E = 0.0;
  double slope = 0.0;   // Lambda-hat
  double stderr_ = 0.0;
  long fit_n_min = 0;
  long fit_n_max = 0;
  double theory = 0.0;          // published normalization, c reading
  double theory_unit = 0.0;     // published normalization, C = 1 reading
  double kappa = 1.0;           // normalization applied to theory_scaled
  double theory_scaled = 0.0;   // kappa * theory
  std::vector<long> n;
  std::vector<double> mean_logR;
};

/// Slope of mean logR(n^3) against 3 log n over [fit_n_min, fit_n_max], with
/// bootstrap stderr over realizations (over antithetic pairs when paired).
/// Throws InsufficientRangeError with fewer than 10 blocks in the window.
LyapunovEstimate estimate_lyapunov(const std::vector<ChainRealization>& chains, double E, long fit_n_min,
                                   long fit_n_max, int bootstrap, std::uint64_t seed, bool antithetic);

/// Same fit on a single mean curve (no stderr).
double lyapunov_slope(const std::vector<long>& n, const std::vector<double>& mean_logR, long fit_n_min,
                      long fit_n_max);

struct GrowthSummary {
  double generic_mean = 0.0, generic_stderr = 0.0;
  double minimal_mean = 0.0, minimal_stderr = 0.0;
  long minimal_count = 0;  // realizations with a distinguished direction
  double predicted_growing = 0.0;
  double predicted_decaying = 0.0;
};

/// Theory: 1/2 + 3 Lambda (growing), max(0, 1/2 - 3 Lambda) (decaying).
GrowthSummary growth_exponents(const std::vector<ChainRealization>& chains, double lambda);

struct DimensionEntry {
  double E = 0.0;
  double lambda = 0.0;
  std::optional<double> d;
  bool pure_point = false;
  bool boundary = false;
};

struct DimensionReport {
  double kappa = 1.0;
  std::vector<DimensionEntry> entries;
};

/// d = 1 - 6 Lambda where Lambda < 1/6, pure-point flag where Lambda > 1/6,
/// boundary annotation within `tol` of 1/6.
DimensionReport dimension_report(const BumpFunction& f, const std::vector<double>& energies, double kappa = 1.0,
                                 ArgumentReading reading = ArgumentReading::liouville_c, double tol = 1e-12);
DimensionReport dimension_report_from_lambda(const std::vector<double>& energies, const std::vector<double>& lambda,
                                             double kappa = 1.0, double tol = 1e-12);

}  // namespace starklab
