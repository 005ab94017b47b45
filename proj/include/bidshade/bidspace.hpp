#pragma once

#include "bidshade/dist.hpp"
#include "bidshade/strategy.hpp"

#include <utility>
#include <vector>

namespace bidshade {

/// Virtualized bids within this of zero count as zero when deciding the
/// reserve value; keeps floating-point noise on h = 0 plateaus from creating
/// spurious reserves.
inline constexpr double kVirtualTol = 1e-9;

enum class DensityMode
{
  Analytic,          // f_B(beta(x)) = f(x) / beta'(x)
  FiniteDifference,  // central differences of F_B
};

/// Distribution of B = beta(X). Holds copies of the strategy and the prior;
/// F_B is evaluated exactly as F(beta^{-1}(b)) by bisection, the grid only
/// brackets the preimage.
class BidDistribution
{
public:
  BidDistribution(ValueDistribution d, ShadingStrategy s, int grid_size, DensityMode mode);

  ShadingStrategy const   &strategy() const { return strategy_; }
  ValueDistribution const &prior() const { return prior_; }
  DensityMode              mode() const { return mode_; }

  std::vector<double> const &values() const { return x_; }
  std::vector<double> const &bids() const { return b_; }
  std::vector<double> const &cdf_grid() const { return F_; }

  double min_bid() const { return b_.front(); }
  double max_bid() const { return b_.back(); }

  /// sup{x : beta(x) <= b}, clamped to the support.
  double preimage(double b) const;
  double cdf(double b) const;
  double survival(double b) const;
  double pdf(double b) const;

private:
  ValueDistribution   prior_;
  ShadingStrategy     strategy_;
  DensityMode         mode_;
  std::vector<double> x_;
  std::vector<double> b_;
  std::vector<double> F_;
};

/// Requires a nondecreasing strategy on the truncated support.
BidDistribution pushforward(ValueDistribution const &d, ShadingStrategy const &s, int grid_size = 512,
                            DensityMode mode = DensityMode::Analytic);

/// psi_B(b) = b - (1 - F_B(b)) / f_B(b).
double bid_virtual_value(BidDistribution const &bd, double b);

/// x_beta: the largest value whose virtualized bid is negative (below
/// -kVirtualTol), refined by bisection; the support minimum if there is none.
/// Computed in value space, so it is defined for non-monotone strategies too.
double reserve_value(ShadingStrategy const &s, ValueDistribution const &d, int grid_size = 4096);

/// beta(x_beta): the largest bid with a negative bid-space virtual value.
double reserve_price_conservative(BidDistribution const &bd);

/// Value intervals [a, b) where h_beta < -kVirtualTol, found on a grid and
/// refined by bisection, sorted left to right.
std::vector<std::pair<double, double>> negative_virtual_intervals(ShadingStrategy const &s,
                                                                  ValueDistribution const &d,
                                                                  int grid_size = 4096);

/// Patch every negative interval [a, b) with level / (1 - F) (so h = 0 there)
/// and lift everything below a by the mass -int_a^b h f, right to left. The
/// result has virtualized bid max(h, 0) and bids at least as high. Returns s
/// itself when there is nothing to patch.
ShadingStrategy clip_virtualized_bid(ShadingStrategy const &s, ValueDistribution const &d, int grid_size = 4096);

struct RevenueCurve
{
  std::vector<double> reserve;
  std::vector<double> revenue;
  double              argmax;
  double              max;
  /// Smallest sampled reserve within relative 1e-6 of the maximum; the
  /// choice of a seller who breaks revenue ties in favour of welfare.
  double              welfare_reserve;
  std::vector<double> near_optimal;
};

double seller_revenue(BidDistribution const &bd, double r);

RevenueCurve seller_revenue_curve(BidDistribution const &bd, int grid_size = 512);

}  // namespace bidshade
