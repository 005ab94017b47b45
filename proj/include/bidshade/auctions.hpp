#pragma once

#include "bidshade/bidspace.hpp"
#include "bidshade/dist.hpp"
#include "bidshade/strategy.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bidshade {

enum class Format
{
  LazySecondPrice,
  EagerSecondPrice,
  Myerson,
  BoostedSecondPrice,
};

std::string format_name(Format f);
Format      parse_format(std::string const &name);

/// One strategic bidder against K - 1 truthful opponents drawn from
/// `opponent`, each facing a personal reserve (their monopoly price unless
/// overridden).
struct AuctionSpec
{
  Format                format   = Format::LazySecondPrice;
  int                   K        = 2;
  ValueDistribution     opponent = ValueDistribution::uniform();
  std::optional<double> opponent_reserve;
  int                   bsp_variant = 1;
  /// Fixes the strategic bidder's reserve price instead of deriving it from
  /// the bid distribution (0 gives the welfare benchmark).
  std::optional<double> strategic_reserve_override;

  double opponent_reserve_price() const;
  void   validate() const;
};

/// Distribution of the highest competing bid the strategic bidder must beat.
class CompetitionCdf
{
public:
  explicit CompetitionCdf(AuctionSpec const &spec);

  double cdf(double b) const;
  double pdf(double b) const;
  /// Bids where G has a kink or a jump in g.
  std::vector<double> kinks() const;

private:
  ValueDistribution opp_;
  int               m_;  // number of opponents
  bool              eager_;
  double            reserve_;
};

CompetitionCdf competition_cdf(AuctionSpec const &spec);

/// Z = max_j max(0, psi_Y(Y_j)) over the K - 1 opponents.
class FzDistribution
{
public:
  explicit FzDistribution(AuctionSpec const &spec);

  double cdf(double t) const;
  double pdf(double t) const;
  double atom() const;
  /// Smallest t with F_Z(t) = 1, +inf for unbounded opponents.
  double top() const;
  /// Virtual value of one opponent with value y.
  double opponent_virtual_value(double y) const;

private:
  ValueDistribution opp_;
  int               m_;
  double            c_;
  double            rstar_;
};

FzDistribution fz(AuctionSpec const &spec);

struct UtilityMode
{
  enum class Kind
  {
    Exact,
    Relaxed,
    Smoothed,
  };
  Kind   kind = Kind::Exact;
  double eta  = 1000.0;

  static UtilityMode exact() { return {Kind::Exact, 1000.0}; }
  static UtilityMode relaxed() { return {Kind::Relaxed, 1000.0}; }
  static UtilityMode smoothed(double eta = 1000.0) { return {Kind::Smoothed, eta}; }
};

std::string mode_name(UtilityMode const &m);

struct BspFit
{
  double reserve;    // bid space
  double slope;
  double intercept;
  double first_positive_bid;  // min{b : psi_B(b) > 0}
  double revenue_argmax;      // argmax_r r (1 - F_B(r))
  bool   retrospective_ok;    // the two agree
};

/// Affine fit of psi_B. Variant 1 fits over the whole bid support and puts
/// the reserve at the fit's root; variant 2 puts the reserve at the
/// conservative reserve price and fits above it.
BspFit bsp_fit(BidDistribution const &bd, int variant);

/// Expected utility by quadrature over the strategic bidder's value.
/// Non-monotone strategies raise MonotonicityError unless require_monotone is
/// false, in which case the same functional is evaluated anyway.
double utility(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
               UtilityMode mode = UtilityMode::exact(), bool require_monotone = true);

double bsp_utility(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
                   UtilityMode mode = UtilityMode::exact(), bool require_monotone = true);

/// Expected payment E[h(X) A(X) 1{cleared}] of the strategic bidder (Exact
/// allocation), optionally restricted to values in [lo, hi].
double expected_payment(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
                        std::optional<double> lo = std::nullopt, std::optional<double> hi = std::nullopt);

/// The strategic bidder's reserve value under `spec` (own conservative reserve
/// unless overridden).
double strategic_reserve_value(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d);

/// Derivative of the Exact utility at s in the direction rho (lazy, eager and
/// Myerson formats).
double directional_derivative(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
                              ShadingStrategy const &rho);

}  // namespace bidshade
