#include "bidshade/auctions.hpp"

#include "bidshade/errors.hpp"
#include "bidshade/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bidshade {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid(double z)
{
  if (z >= 0.0)
  {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double const e = std::exp(z);
  return e / (1.0 + e);
}

// sup{x : beta(x) < level} on the truncated support, i.e. the first value that
// clears a bid-space reserve; the support minimum if every bid clears.
double clearing_value(ShadingStrategy const &s, ValueDistribution const &d, double level)
{
  std::vector<double> const x = value_grid(d, 4096, kinks(s, d));
  for (std::size_t i = x.size(); i-- > 0;)
  {
    if (bid(s, x[i]) < level)
    {
      if (i + 1 == x.size())
      {
        return x[i];
      }
      double lo = x[i];
      double hi = x[i + 1];
      for (int k = 0; k < 200; ++k)
      {
        double const mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
        {
          break;
        }
        (bid(s, mid) < level ? lo : hi) = mid;
      }
      return hi;
    }
  }
  return d.support().lo;
}

void check_monotone(ShadingStrategy const &s, ValueDistribution const &d, bool require)
{
  if (require)
  {
    if (auto bad = find_decrease(s, d))
    {
      throw MonotonicityError(bad->first, bad->second);
    }
  }
}

// Everything the utility integrand needs, resolved once per evaluation.
struct Mechanism
{
  AuctionSpec const       &spec;
  ShadingStrategy const   &s;
  ValueDistribution const &d;
  CompetitionCdf           G;
  FzDistribution           Z;
  double                   fit_slope     = 0.0;
  double                   fit_intercept = 0.0;

  Mechanism(AuctionSpec const &sp, ShadingStrategy const &st, ValueDistribution const &dd)
    : spec(sp)
    , s(st)
    , d(dd)
    , G(sp)
    , Z(sp)
  {}

  bool bsp() const { return spec.format == Format::BoostedSecondPrice; }

  // Allocation probability given the bid b and virtualized bid h.
  double allocation(double b, double h) const
  {
    switch (spec.format)
    {
    case Format::LazySecondPrice:
    case Format::EagerSecondPrice:
      return G.cdf(b);
    case Format::Myerson:
      return h >= -kVirtualTol ? Z.cdf(std::max(h, 0.0)) : 0.0;
    case Format::BoostedSecondPrice:
      return Z.cdf(std::max(fit_slope * b + fit_intercept, 0.0));
    }
    return 0.0;
  }

  // Quantity the Relaxed and Smoothed weights threshold at zero.
  double gate(double b, double h) const
  {
    if (bsp() && spec.bsp_variant == 1)
    {
      return fit_slope * b + fit_intercept;
    }
    return h;
  }

  std::vector<double> breakpoints(double lo, double hi) const
  {
    std::vector<double> out = kinks(s, d);
    auto const          h   = [&](double x) { return virtualized_bid(s, d, x); };
    auto const          b   = [&](double x) { return bid(s, x); };
    std::vector<double> hl{-kVirtualTol, 0.0};
    if (spec.format == Format::Myerson && std::isfinite(Z.top()))
    {
      hl.push_back(Z.top());
    }
    auto const hx = quad::crossings(h, hl, lo, hi);
    out.insert(out.end(), hx.begin(), hx.end());
    std::vector<double> bl = G.kinks();
    if (bsp() && fit_slope != 0.0)
    {
      bl.push_back(-fit_intercept / fit_slope);
      if (std::isfinite(Z.top()))
      {
        bl.push_back((Z.top() - fit_intercept) / fit_slope);
      }
    }
    auto const bx = quad::crossings(b, bl, lo, hi);
    out.insert(out.end(), bx.begin(), bx.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  // Value from which the strategic bidder clears in the Exact mechanism.
  double exact_threshold() const
  {
    if (spec.strategic_reserve_override)
    {
      return clearing_value(s, d, *spec.strategic_reserve_override);
    }
    if (bsp() && spec.bsp_variant == 1)
    {
      return clearing_value(s, d, -fit_intercept / fit_slope);
    }
    return reserve_value(s, d);
  }

  double weight(UtilityMode const &mode, double b, double h) const
  {
    switch (mode.kind)
    {
    case UtilityMode::Kind::Exact:
      return 1.0;
    case UtilityMode::Kind::Relaxed:
      return gate(b, h) >= -kVirtualTol ? 1.0 : 0.0;
    case UtilityMode::Kind::Smoothed:
      return sigmoid(mode.eta * gate(b, h));
    }
    return 0.0;
  }

  template <typename Kernel>
  double integrate(UtilityMode const &mode, Kernel const &kernel, std::optional<double> lo_clip,
                   std::optional<double> hi_clip) const
  {
    Support const sup = d.truncated_support();
    double        lo  = sup.lo;
    double        hi  = sup.hi;
    if (mode.kind == UtilityMode::Kind::Exact)
    {
      lo = exact_threshold();
    }
    if (lo_clip)
    {
      lo = std::max(lo, *lo_clip);
    }
    if (hi_clip)
    {
      hi = std::min(hi, *hi_clip);
    }
    if (!(hi > lo))
    {
      return 0.0;
    }
    std::vector<double> const br = breakpoints(sup.lo, sup.hi);
    return quad::integrate(
      [&](double x) {
        double const b = bid(s, x);
        double const h = virtualized_bid(s, d, x);
        return kernel(x, h, allocation(b, h) * weight(mode, b, h)) * d.pdf(x);
      },
      lo, hi, br);
  }
};

struct FitMoments
{
  double slope;
  double intercept;
};

FitMoments fit_affine(ShadingStrategy const &s, ValueDistribution const &d, double lo)
{
  Support const       sup = d.truncated_support();
  std::vector<double> br  = kinks(s, d);
  auto const          h   = [&](double x) { return virtualized_bid(s, d, x); };
  auto const          b   = [&](double x) { return bid(s, x); };
  double const        w   = quad::integrate([&](double x) { return d.pdf(x); }, lo, sup.hi, br);
  if (!(w > 0.0))
  {
    throw NumericError("affine fit over an empty bid range");
  }
  double const mb  = quad::integrate([&](double x) { return b(x) * d.pdf(x); }, lo, sup.hi, br) / w;
  double const mh  = quad::integrate([&](double x) { return h(x) * d.pdf(x); }, lo, sup.hi, br) / w;
  double const sbb = quad::integrate([&](double x) { return (b(x) - mb) * (b(x) - mb) * d.pdf(x); }, lo, sup.hi, br);
  double const sbh = quad::integrate([&](double x) { return (b(x) - mb) * (h(x) - mh) * d.pdf(x); }, lo, sup.hi, br);
  if (!(sbb > 1e-14 * std::max(1.0, mb * mb) * w))
  {
    throw NumericError("degenerate affine fit: bids have no variance");
  }
  double const slope = sbh / sbb;
  return {slope, mh - slope * mb};
}

}  // namespace

std::string format_name(Format f)
{
  switch (f)
  {
  case Format::LazySecondPrice:
    return "lazy";
  case Format::EagerSecondPrice:
    return "eager";
  case Format::Myerson:
    return "myerson";
  case Format::BoostedSecondPrice:
    return "bsp";
  }
  return "?";
}

Format parse_format(std::string const &name)
{
  if (name == "lazy")
  {
    return Format::LazySecondPrice;
  }
  if (name == "eager")
  {
    return Format::EagerSecondPrice;
  }
  if (name == "myerson")
  {
    return Format::Myerson;
  }
  if (name == "bsp" || name == "boosted")
  {
    return Format::BoostedSecondPrice;
  }
  throw DomainError("unknown auction format: " + name);
}

std::string mode_name(UtilityMode const &m)
{
  switch (m.kind)
  {
  case UtilityMode::Kind::Exact:
    return "exact";
  case UtilityMode::Kind::Relaxed:
    return "relaxed";
  case UtilityMode::Kind::Smoothed:
    return "smoothed";
  }
  return "?";
}

double AuctionSpec::opponent_reserve_price() const
{
  return opponent_reserve ? *opponent_reserve : monopoly_price(opponent);
}

void AuctionSpec::validate() const
{
  if (K < 2)
  {
    throw DomainError("auction needs K >= 2 bidders");
  }
  if (bsp_variant != 1 && bsp_variant != 2)
  {
    throw DomainError("boosted second price variant must be 1 or 2");
  }
  if (strategic_reserve_override && !std::isfinite(*strategic_reserve_override))
  {
    throw DomainError("reserve override must be finite");
  }
  if (opponent_reserve && !std::isfinite(*opponent_reserve))
  {
    throw DomainError("opponent reserve must be finite");
  }
}

CompetitionCdf::CompetitionCdf(AuctionSpec const &spec)
  : opp_(spec.opponent)
  , m_(spec.K - 1)
  , eager_(spec.format == Format::EagerSecondPrice)
  , reserve_(spec.opponent_reserve_price())
{
  spec.validate();
}

double CompetitionCdf::cdf(double b) const
{
  double const y = eager_ && b < reserve_ ? reserve_ : b;
  return std::pow(opp_.cdf(y), m_);
}

double CompetitionCdf::pdf(double b) const
{
  if (eager_ && b < reserve_)
  {
    return 0.0;
  }
  return m_ * std::pow(opp_.cdf(b), m_ - 1) * opp_.pdf(b);
}

std::vector<double> CompetitionCdf::kinks() const
{
  std::vector<double> out{opp_.support().lo};
  if (opp_.support().bounded())
  {
    out.push_back(opp_.support().hi);
  }
  if (eager_)
  {
    out.push_back(reserve_);
  }
  return out;
}

CompetitionCdf competition_cdf(AuctionSpec const &spec)
{
  return CompetitionCdf(spec);
}

FzDistribution::FzDistribution(AuctionSpec const &spec)
  : opp_(spec.opponent)
  , m_(spec.K - 1)
  , c_(spec.opponent.virtual_value_slope())
  , rstar_(spec.opponent.virtual_value_root())
{
  spec.validate();
  if (!opp_.is_regular())
  {
    throw DomainError("F_Z needs a regular opponent prior");
  }
}

double FzDistribution::cdf(double t) const
{
  if (t < 0.0)
  {
    return 0.0;
  }
  return std::pow(opp_.cdf(t / c_ + rstar_), m_);
}

double FzDistribution::pdf(double t) const
{
  if (t <= 0.0)
  {
    return 0.0;
  }
  double const y = t / c_ + rstar_;
  return m_ * std::pow(opp_.cdf(y), m_ - 1) * opp_.pdf(y) / c_;
}

double FzDistribution::atom() const
{
  return std::pow(opp_.cdf(rstar_), m_);
}

double FzDistribution::top() const
{
  return opp_.support().bounded() ? c_ * (opp_.support().hi - rstar_) : kInf;
}

double FzDistribution::opponent_virtual_value(double y) const
{
  return c_ * (y - rstar_);
}

FzDistribution fz(AuctionSpec const &spec)
{
  return FzDistribution(spec);
}

BspFit bsp_fit(BidDistribution const &bd, int variant)
{
  if (variant != 1 && variant != 2)
  {
    throw DomainError("boosted second price variant must be 1 or 2");
  }
  ShadingStrategy const   &s  = bd.strategy();
  ValueDistribution const &d  = bd.prior();
  double const             xr = reserve_value(s, d);
  BspFit                   out{};
  if (variant == 1)
  {
    auto const fit = fit_affine(s, d, d.support().lo);
    if (!(fit.slope > 0.0))
    {
      throw NumericError("fitted bid virtual value is not increasing");
    }
    out.slope     = fit.slope;
    out.intercept = fit.intercept;
    out.reserve   = std::clamp(-fit.intercept / fit.slope, bd.min_bid(), bd.max_bid());
  }
  else
  {
    auto const fit = fit_affine(s, d, xr);
    out.slope      = fit.slope;
    out.intercept  = fit.intercept;
    out.reserve    = bid(s, xr);
  }

  // First bid with a positive virtual value, scanning upward in value space.
  std::vector<double> const x   = value_grid(d, 4096, kinks(s, d));
  auto const                h   = [&](double t) { return virtualized_bid(s, d, t); };
  double                    xp  = x.back();
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    if (h(x[i]) > kVirtualTol)
    {
      xp = i == 0 ? x[0] : quad::bisect([&](double t) { return h(t) - kVirtualTol; }, x[i - 1], x[i]);
      break;
    }
  }
  out.first_positive_bid = bid(s, xp);
  RevenueCurve const curve = seller_revenue_curve(bd, 512);
  out.revenue_argmax       = curve.argmax;
  out.retrospective_ok     = seller_revenue(bd, out.first_positive_bid) >= curve.max * (1.0 - 1e-6);
  return out;
}

double strategic_reserve_value(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d)
{
  if (spec.strategic_reserve_override)
  {
    return clearing_value(s, d, *spec.strategic_reserve_override);
  }
  return reserve_value(s, d);
}

double utility(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d, UtilityMode mode,
               bool require_monotone)
{
  spec.validate();
  if (spec.format == Format::BoostedSecondPrice)
  {
    return bsp_utility(spec, s, d, mode, require_monotone);
  }
  check_monotone(s, d, require_monotone);
  Mechanism const m(spec, s, d);
  return m.integrate(mode, [](double x, double h, double a) { return (x - h) * a; }, std::nullopt, std::nullopt);
}

double bsp_utility(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d, UtilityMode mode,
                   bool require_monotone)
{
  spec.validate();
  check_monotone(s, d, require_monotone);
  AuctionSpec bspec = spec;
  bspec.format      = Format::BoostedSecondPrice;
  Mechanism m(bspec, s, d);
  double const xlo = spec.bsp_variant == 1 ? d.support().lo : reserve_value(s, d);
  auto const   fit = fit_affine(s, d, xlo);
  m.fit_slope      = fit.slope;
  m.fit_intercept  = fit.intercept;
  if (spec.bsp_variant == 1 && !(fit.slope > 0.0))
  {
    throw NumericError("fitted bid virtual value is not increasing");
  }
  return m.integrate(mode, [](double x, double h, double a) { return (x - h) * a; }, std::nullopt, std::nullopt);
}

double expected_payment(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
                        std::optional<double> lo, std::optional<double> hi)
{
  spec.validate();
  check_monotone(s, d, true);
  Mechanism m(spec, s, d);
  if (spec.format == Format::BoostedSecondPrice)
  {
    double const xlo = spec.bsp_variant == 1 ? d.support().lo : reserve_value(s, d);
    auto const   fit = fit_affine(s, d, xlo);
    m.fit_slope      = fit.slope;
    m.fit_intercept  = fit.intercept;
  }
  return m.integrate(UtilityMode::exact(), [](double, double h, double a) { return h * a; }, lo, hi);
}

double directional_derivative(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
                              ShadingStrategy const &rho)
{
  spec.validate();
  if (spec.format == Format::BoostedSecondPrice || spec.strategic_reserve_override)
  {
    throw DomainError("directional derivative is available for lazy, eager and Myerson formats");
  }
  Mechanism const m(spec, s, d);
  Support const   sup      = d.truncated_support();
  double const    xb       = reserve_value(s, d);
  bool const      interior = xb > sup.lo;
  auto const      hrho     = [&](double x) { return bid(rho, x) - bid_derivative(rho, x) * d.mills_ratio(x); };

  std::vector<double> br = m.breakpoints(sup.lo, sup.hi);
  auto const          kr = kinks(rho, d);
  br.insert(br.end(), kr.begin(), kr.end());

  double bulk;
  if (spec.format == Format::Myerson)
  {
    bulk = quad::integrate(
      [&](double x) {
        double const h = virtualized_bid(s, d, x);
        if (h < -kVirtualTol)
        {
          return 0.0;
        }
        double const hp = std::max(h, 0.0);
        return hrho(x) * ((x - h) * m.Z.pdf(hp) - m.Z.cdf(hp)) * d.pdf(x);
      },
      xb, sup.hi, br);
  }
  else
  {
    bulk = quad::integrate(
      [&](double x) {
        double const b = bid(s, x);
        return m.G.pdf(b) * (x - b) * bid(rho, x) * d.pdf(x);
      },
      xb, sup.hi, br);
  }

  double const S  = d.survival(xb);
  double const f  = d.pdf(xb);
  double const Gb = m.G.cdf(bid(s, xb));
  if (!interior)
  {
    // No reserve to move: only the boundary term of the integration by parts.
    return spec.format == Format::Myerson ? bulk : bulk - bid(rho, xb) * S * Gb;
  }
  double const hp = virtualized_bid_derivative(s, d, xb);
  if (!(std::abs(hp) > 1e-12))
  {
    throw SingularityError("virtualized bid is flat at the reserve value");
  }
  if (spec.format == Format::Myerson)
  {
    return bulk + hrho(xb) / hp * m.Z.atom() * f * xb;
  }
  return bulk + Gb * (xb * f / hp - S) * bid(rho, xb) - bid_derivative(rho, xb) * xb * S * Gb / hp;
}

}  // namespace bidshade
