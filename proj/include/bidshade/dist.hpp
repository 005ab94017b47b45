#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bidshade {

/// Generalized Pareto parameters. Every supported prior belongs to this
/// family: Uniform[lo, hi] is GP(lo, hi - lo, -1), Exponential(rate) is
/// GP(0, 1/rate, 0).
struct GpParams
{
  double mu;
  double sigma;
  double xi;
};

struct Support
{
  double lo;
  double hi;  // +inf for unbounded priors

  bool bounded() const;
};

/// Parametric value prior F. Immutable after construction.
///
/// Unbounded priors are truncated at quantile(1 - kTailMass) wherever a finite
/// range is needed (grids, quadrature); `truncated_support()` returns that
/// range and `support()` the mathematical one.
class ValueDistribution
{
public:
  enum class Kind
  {
    Uniform,
    Exponential,
    GeneralizedPareto
  };

  static constexpr double kTailMass     = 1e-9;
  static constexpr double kDensityFloor = 1e-300;

  static ValueDistribution uniform(double lo = 0.0, double hi = 1.0);
  static ValueDistribution exponential(double rate = 1.0);
  static ValueDistribution generalized_pareto(double mu, double sigma, double xi);

  Kind                       kind() const { return kind_; }
  std::string                name() const;
  std::vector<double> const &params() const { return params_; }
  GpParams                   gp() const { return gp_; }

  Support support() const;
  Support truncated_support() const;

  double cdf(double x) const;
  /// 1 - F(x), computed without cancellation in the upper tail.
  double survival(double x) const;
  /// Inverse of the survival function: the x with 1 - F(x) = s.
  double survival_quantile(double s) const;
  double pdf(double x) const;
  double pdf_derivative(double x) const;
  double quantile(double p) const;
  /// (1 - F(x)) / f(x); the inverse hazard rate. Finite on the support
  /// interior for every GP prior.
  double mills_ratio(double x) const;

  /// Slope c_psi = 1 - xi of the affine virtual value.
  double virtual_value_slope() const { return 1.0 - gp_.xi; }
  /// Root of the affine virtual value (not clamped to the support).
  double virtual_value_root() const;
  bool   is_regular() const { return virtual_value_slope() > 0.0; }

  bool in_support(double x) const;

  bool operator==(ValueDistribution const &other) const;

private:
  ValueDistribution(Kind kind, std::vector<double> params, GpParams gp);

  Kind                kind_;
  std::vector<double> params_;
  GpParams            gp_;
};

/// psi_F(x) = x - (1 - F(x)) / f(x).
double virtual_value(ValueDistribution const &d, double x);

/// Positive root of psi_F (argmax of r (1 - F(r)) for regular priors); grid
/// argmax with local refinement otherwise.
double monopoly_price(ValueDistribution const &d);

/// f(x) / (1 - F(x)).
double hazard_rate(ValueDistribution const &d, double x);

/// n i.i.d. draws by inverse cdf from a seeded generator. Bit-identical for
/// identical seeds.
std::vector<double> sample(ValueDistribution const &d, std::uint64_t seed, std::size_t n);

/// Open-interval uniform in (0, 1) from 53 random bits. Shared by every
/// sampler so that draws do not depend on the standard library's
/// distribution implementations.
double unit_uniform(std::uint64_t bits);

}  // namespace bidshade
