#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "starklab/dop853.hpp"
#include "starklab/potentials.hpp"
#include "starklab/transforms.hpp"

namespace starklab {

struct IntegrationConfig {
  double rtol = 1e-10;
  double atol = 1e-12;
  /// In the integration variable (xi for Pruefer runs, x for direct runs).
  double max_step = 0.2;
  double min_step = 1e-12;
  /// Capture spacing in xi. Zero disables stride capture.
  double stride = 0.05;
  /// When non-empty, stride capture is restricted to these xi intervals.
  std::vector<std::pair<double, double>> capture_windows;
  std::string method = "dop853";

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  dop853::Options options() const;
};

enum class TrajectoryKind { prufer, direct };

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::prufer;
  std::vector<double> xi;
  std::vector<double> x;
  std::vector<PruferState> prufer;            // kind == prufer
  std::vector<std::array<double, 2>> direct;  // kind == direct: (u, du/dx)
  double E = 0.0;
  double beta = 0.0;
  std::shared_ptr<const PotentialSpec> spec;
  dop853::Stats stats;

  std::size_t size() const noexcept { return xi.size(); }
  /// (phi, dphi/dxi) at capture i.
  std::pair<double, double> phi_at(std::size_t i) const;
  /// (u, du/dx) at capture i.
  std::pair<double, double> u_at(std::size_t i) const;
};

/// Called at every capture point with (xi, state).
using PruferObserver = std::function<void(double, const PruferState&)>;

/// theta(xi0) = beta, logR(xi0) = 0, integrated to xi1 with capture at the
/// configured stride plus `extra_points`.
Trajectory integrate_prufer(std::shared_ptr<const PotentialSpec> spec, double E, double xi0, double xi1,
                            double beta, const IntegrationConfig& cfg, std::vector<double> extra_points = {});
Trajectory integrate_prufer(const PotentialSpec& spec, double E, double xi0, double xi1, double beta,
                            const IntegrationConfig& cfg, std::vector<double> extra_points = {});

/// Streaming variant: nothing is stored, the observer sees each capture.
/// Returns the final state.
PruferState integrate_prufer_observed(const PotentialSpec& spec, double E, double xi0, double xi1,
                                      PruferState start, const IntegrationConfig& cfg,
                                      const PruferObserver& observe, std::vector<double> extra_points = {},
                                      dop853::Stats* stats = nullptr);

/// Modified Pruefer variables from xi0 (requires V < 1 along the path);
/// the initial state is converted from (phi, phi') = (sin beta, cos beta).
struct ModifiedTrajectory {
  std::vector<double> xi;
  std::vector<ModifiedPruferState> states;
  double E = 0.0;
  double beta = 0.0;
};
ModifiedTrajectory integrate_modified_prufer(const PotentialSpec& spec, double E, double xi0, double xi1,
                                             double beta, const IntegrationConfig& cfg,
                                             std::vector<double> extra_points = {});

/// u'' = (q(x) - x - E) u on [x0, x1] from (u, u')(x0). Captures follow the
/// xi stride mapped to x, plus `extra_points` given in x.
Trajectory integrate_direct(std::shared_ptr<const PotentialSpec> spec, double E, double x0, double x1,
                            std::array<double, 2> init, const IntegrationConfig& cfg,
                            std::vector<double> extra_points = {});
Trajectory integrate_direct(const PotentialSpec& spec, double E, double x0, double x1, std::array<double, 2> init,
                            const IntegrationConfig& cfg, std::vector<double> extra_points = {});

/// u1 u2' - u1' u2 on the shared grid. Throws IncompatibleError when the
/// energies, specs or grids differ.
std::vector<double> wronskian(const Trajectory& t1, const Trajectory& t2);

/// max |W - W(first)| / |W(first)|.
double relative_drift(const std::vector<double>& w);

/// Two Pruefer solutions sharing every potential evaluation: direction
/// beta = 0 ((phi, phi') = (0, 1)) and beta = pi/2 ((1, 0)). Any other
/// direction follows by superposition.
struct PairState {
  PruferState zero;
  PruferState half_pi;

  /// (phi, phi') for direction beta.
  std::pair<double, double> phi(double beta) const;
  double logR(double beta) const;
};

/// Cumulative moments int phi_i phi_j / x dxi, i.e. int u_i u_j dx.
struct MomentSample {
  double L = 0.0;  // x coordinate
  double m00 = 0.0, m01 = 0.0, m11 = 0.0;
  /// int |u_beta|^2 dx for direction beta (0 -> index 0, pi/2 -> index 1).
  double l2(double beta) const;
};

struct PairRunOptions {
  /// logR of both directions recorded at these xi.
  std::vector<double> record_xi;
  /// Moments recorded at these x (the L grid).
  std::vector<double> record_L;
};

struct PairRun {
  PairState final_state;
  std::vector<double> record_xi;
  std::vector<PairState> recorded;
  std::vector<MomentSample> moments;
  dop853::Stats stats;
};

PairRun integrate_pair(const PotentialSpec& spec, double E, double xi0, double xi1, const IntegrationConfig& cfg,
                       const PairRunOptions& options = {});

struct GrowthFit {
  std::vector<double> L;
  std::vector<double> log_values;  // log int |u|^2 dx up to L
  double exponent = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of the log-log fit
  double fit_L_min = 0.0;
  double fit_L_max = 0.0;
};

/// Least-squares exponent of cumulative values over the top two decades of L.
GrowthFit fit_growth(std::vector<double> L, const std::vector<double>& cumulative);

/// Trapezoid accumulation of int |u|^2 dx on the captured grid, read off at
/// the L grid (linear in the cumulative integral between captures).
/// Throws ResolutionError with fewer than 10 captures per decade of x.
GrowthFit l2_growth(const Trajectory& traj, const std::vector<double>& L_grid);

/// Streaming trapezoid in xi of phi^2 / x.
class L2Accumulator {
 public:
  void add(double xi, double phi);
  double value() const noexcept { return total_; }
  double last_x() const noexcept { return last_x_; }

 private:
  bool started_ = false;
  double last_xi_ = 0.0;
  double last_f_ = 0.0;
  double last_x_ = 0.0;
  double total_ = 0.0;
};

/// Log-spaced L grid over [a, b] with `per_decade` points per decade.
std::vector<double> log_grid(double a, double b, int per_decade);

struct BcSearchResult {
  bool distinguished = false;
  std::optional<double> beta_star;
  double logR_min = 0.0;
  double logR_orthogonal = 0.0;  // at beta* + pi/2
  std::vector<double> scan_beta;
  std::vector<double> scan_logR;
  PairState final_state;
};

/// Minimize beta -> logR(xi_max; beta) over [0, pi) from a pair final state:
/// 64-point scan, then golden section to 1e-4.
BcSearchResult minimal_growth_bc(const PairState& final_state);
BcSearchResult find_minimal_growth_bc(const PotentialSpec& spec, double E, double xi_max,
                                      const IntegrationConfig& cfg);
/// Closed-form minimizer (smallest eigenvector of the 2x2 Gram matrix).
double minimal_growth_bc_closed_form(const PairState& final_state);

void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

/// Little-endian layout: 8-byte magic "STKTRAJ1", uint64 count, float64 E,
/// float64 beta, uint32 kind (0 prufer, 1 direct), uint32 columns (= 4),
/// then count rows of 4 float64: xi, x, and logR, theta or u, u'.
void write_trajectory_binary(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory_binary(const std::filesystem::path& path);

}  // namespace starklab
