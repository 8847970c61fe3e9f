#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace starklab {

/// Smooth profile f supported in (0, 1). Evaluation is clamped to zero
/// outside the open interval regardless of what the sampler returns there.
class BumpFunction {
 public:
  using Sampler = std::function<double(double)>;

  /// Throws std::invalid_argument if the sampler is empty, non-finite on
  /// [0, 1], or identically zero there.
  explicit BumpFunction(Sampler f, Sampler df = {}, std::string label = "custom");

  /// exp(-1/(t(1-t))) times `scale`.
  static BumpFunction standard(double scale = 1.0);
  /// The library default: the standard bump normalized to unit integral.
  static BumpFunction default_bump();
  /// Same profile normalized to unit integral; used as the mollifier.
  static BumpFunction default_mollifier();
  /// Monotone-cubic interpolation through sampled (t, f(t)) pairs.
  static BumpFunction from_table(std::vector<double> t, std::vector<double> f,
                                 std::string label = "table");
  /// Two-column text file: t f(t). Blank lines and '#' comments ignored.
  static BumpFunction load_table(const std::filesystem::path& path);

  double operator()(double t) const;
  /// Analytic derivative when provided, otherwise a central difference.
  double derivative(double t) const;
  bool has_derivative() const noexcept { return static_cast<bool>(df_); }

  /// Multiply the profile by s. A zero factor is allowed and yields the
  /// zero-amplitude test override.
  BumpFunction scaled(double s) const;
  double scale() const noexcept { return scale_; }

  double integral() const noexcept { return integral_; }
  double abs_integral() const noexcept { return abs_integral_; }
  double sup() const noexcept { return sup_; }
  /// Integral of t f(t); the first moment used by the mollifier split.
  double first_moment() const noexcept { return first_moment_; }
  const std::string& label() const noexcept { return label_; }

  /// Cached 64-point Gauss-Legendre rule on [0, 1] with f values at the
  /// nodes; weights are renormalized so that sum(w * f) equals integral().
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> node_values() const noexcept { return values_; }
  std::span<const double> node_derivatives() const noexcept { return derivs_; }

 private:
  BumpFunction() = default;
  void finalize();

  Sampler f_;
  Sampler df_;
  double scale_ = 1.0;
  std::string label_;
  double integral_ = 0.0;
  double abs_integral_ = 0.0;
  double sup_ = 0.0;
  double first_moment_ = 0.0;
  std::vector<double> nodes_, weights_, values_, derivs_;
};

/// f^(k) = int_0^1 e^{ikt} f(t) dt by adaptive Gauss-Kronrod quadrature.
std::complex<double> bump_fourier(const BumpFunction& f, double k);

struct ZeroPotential {};

/// q(x) = C (1 + |x|)^{-alpha}
struct PowerDecay {
  double amplitude = 1.0;
  double exponent = 0.3;
};

/// User-supplied q(x), optionally with q'(x).
struct AnalyticPotential {
  std::function<double(double)> q;
  std::function<double(double)> dq;
  std::string label = "analytic";
};

/// q(x) = C1 x^{-1/2} sin(C2 x^{3/2}). The defaults make
/// q(x)/x = -8 sin(2 xi)/xi, the leading Wigner-von Neumann tail, which is
/// resonant with the free Pruefer rotation at E = 0.
struct WignerVonNeumannLike {
  double c1 = -12.0;
  double c2 = 4.0 / 3.0;
};

/// q(x) = c sum_n n^{-1/2} f(sqrt(x/c) - n) sin(4/3 x^{3/2} + a_n); block n
/// occupies xi in [n^3, (n+1)^3] in the Liouville coordinate.
struct RandomBump {
  std::shared_ptr<const BumpFunction> bump;
  std::uint64_t seed = 0;
  /// Added to every a_n. A shift of pi maps q to -q (antithetic partner).
  double phase_shift = 0.0;
  /// Explicit a_n table (index n-1). Indices past the end fall back to the
  /// counter generator.
  std::shared_ptr<const std::vector<double>> phases;

  /// a_n in [0, 2 pi) (before phase_shift), pure in (seed, n).
  double phase(long n) const;
};

using PotentialSpec =
    std::variant<ZeroPotential, PowerDecay, AnalyticPotential, WignerVonNeumannLike, RandomBump>;

RandomBump make_random_bump(std::uint64_t seed, double scale = 1.0);
RandomBump make_random_bump(std::shared_ptr<const BumpFunction> bump, std::uint64_t seed);

/// Throws std::invalid_argument naming the offending parameter.
void validate(const PotentialSpec& spec);

/// Short deterministic description, e.g. "power_decay(C=1,alpha=0.3)".
std::string describe(const PotentialSpec& spec);
std::string variant_name(const PotentialSpec& spec);

double eval_potential(const PotentialSpec& spec, double x);
/// q'(x) when the spec carries a derivative sampler.
std::optional<double> eval_potential_derivative(const PotentialSpec& spec, double x);
bool has_derivative(const PotentialSpec& spec);

/// q(c xi^{2/3}) / (c xi^{2/3}) evaluated directly in xi. Requires xi >= 1.
double eval_random_in_xi(const RandomBump& spec, double xi);
namespace detail {
/// eval_random_in_xi with s = cbrt(xi) supplied by the caller.
double random_in_xi(const RandomBump& spec, double xi, double s);
}  // namespace detail
/// d/dxi of eval_random_in_xi.
double eval_random_in_xi_derivative(const RandomBump& spec, double xi);

/// Block index n with sqrt(x/c) in (n, n+1), or nullopt when no summand of
/// the random series is active at x.
std::optional<long> active_block(double x);

struct SmoothnessOptions {
  double alpha = 0.5;
  double x_min = 0.0;
  double x_max = 10.0;
  /// Refinement level; doubling it nests the previous probe sets.
  int density = 1;
  double eps_min = 1e-4;
  int eps_points = 200;
  int jobs = 0;
};

struct SmoothnessReport {
  double alpha = 0.0;
  std::vector<double> x;
  std::vector<double> holder;  // sup_{|x-y|<1} |q(x)-q(y)| / |x-y|^alpha at each x
  double holder_sup = 0.0;
  double zygmund = 0.0;
  double dini = 0.0;
  bool dini_uses_derivative = false;
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t probe_offsets = 0;
  double eps_min = 0.0;
  int eps_points = 0;
};

SmoothnessReport smoothness_report(const PotentialSpec& spec, const SmoothnessOptions& options);

namespace serial {
/// Single-threaded reference for smoothness_report.
SmoothnessReport smoothness_report(const PotentialSpec& spec, const SmoothnessOptions& options);
}  // namespace serial

}  // namespace starklab
