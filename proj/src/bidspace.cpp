#include "bidshade/bidspace.hpp"

#include "bidshade/errors.hpp"
#include "bidshade/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace bidshade {

BidDistribution::BidDistribution(ValueDistribution d, ShadingStrategy s, int grid_size, DensityMode mode)
  : prior_(std::move(d))
  , strategy_(std::move(s))
  , mode_(mode)
{
  x_ = value_grid(prior_, grid_size, kinks(strategy_, prior_));
  b_.reserve(x_.size());
  F_.reserve(x_.size());
  for (double x : x_)
  {
    b_.push_back(bid(strategy_, x));
    F_.push_back(prior_.cdf(x));
  }
}

double BidDistribution::preimage(double b) const
{
  if (b < b_.front())
  {
    return x_.front();
  }
  double lo;
  double hi;
  if (b >= b_.back())
  {
    if (prior_.support().bounded())
    {
      return x_.back();
    }
    lo = x_.back();
    hi = lo + (lo - x_.front() + 1.0);
    for (int i = 0; i < 60 && bid(strategy_, hi) <= b; ++i)
    {
      lo = hi;
      hi = 2.0 * hi;
    }
    if (bid(strategy_, hi) <= b)
    {
      return hi;
    }
  }
  else
  {
    auto const j = static_cast<std::size_t>(std::upper_bound(b_.begin(), b_.end(), b) - b_.begin());
    lo           = x_[j - 1];
    hi           = x_[j];
  }
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i)
  {
    double const mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
    {
      break;
    }
    (bid(strategy_, mid) <= b ? lo : hi) = mid;
  }
  return lo;
}

double BidDistribution::cdf(double b) const
{
  if (b < b_.front())
  {
    return 0.0;
  }
  return prior_.cdf(preimage(b));
}

double BidDistribution::survival(double b) const
{
  if (b < b_.front())
  {
    return 1.0;
  }
  return prior_.survival(preimage(b));
}

double BidDistribution::pdf(double b) const
{
  if (mode_ == DensityMode::Analytic)
  {
    double const x     = preimage(b);
    double const slope = bid_derivative(strategy_, x);
    if (!(slope > 0.0))
    {
      throw SingularityError("bid density undefined where the strategy is flat");
    }
    return prior_.pdf(x) / slope;
  }
  double const delta = 1e-5 * std::max(1e-12, b_.back() - b_.front());
  return (cdf(b + delta) - cdf(b - delta)) / (2.0 * delta);
}

BidDistribution pushforward(ValueDistribution const &d, ShadingStrategy const &s, int grid_size,
                            DensityMode mode)
{
  if (auto bad = find_decrease(s, d))
  {
    throw MonotonicityError(bad->first, bad->second);
  }
  return BidDistribution(d, s, grid_size, mode);
}

double bid_virtual_value(BidDistribution const &bd, double b)
{
  if (b < bd.min_bid() || b > bd.max_bid())
  {
    throw DomainError("bid outside the bid support");
  }
  double const f = bd.pdf(b);
  if (!(f > ValueDistribution::kDensityFloor))
  {
    throw DomainError("bid density vanishes");
  }
  return b - bd.survival(b) / f;
}

double reserve_value(ShadingStrategy const &s, ValueDistribution const &d, int grid_size)
{
  std::vector<double> const x = value_grid(d, grid_size, kinks(s, d));
  auto const h = [&](double t) { return virtualized_bid(s, d, t); };
  for (std::size_t i = x.size(); i-- > 0;)
  {
    if (h(x[i]) < -kVirtualTol)
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
        (h(mid) < -kVirtualTol ? lo : hi) = mid;
      }
      return hi;
    }
  }
  return d.support().lo;
}

double reserve_price_conservative(BidDistribution const &bd)
{
  return bid(bd.strategy(), reserve_value(bd.strategy(), bd.prior()));
}

std::vector<std::pair<double, double>> negative_virtual_intervals(ShadingStrategy const &s,
                                                                  ValueDistribution const &d, int grid_size)
{
  auto const negative = [&](double x) { return virtualized_bid(s, d, x) < -kVirtualTol; };
  // First point of (lo, hi] where the predicate flips from its value at lo.
  auto const boundary = [&](double lo, double hi) {
    bool const left = negative(lo);
    for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it)
    {
      double const mid = 0.5 * (lo + hi);
      (negative(mid) == left ? lo : hi) = mid;
    }
    return hi;
  };
  std::vector<double> const              x = value_grid(d, grid_size, kinks(s, d));
  std::vector<std::pair<double, double>> out;
  bool                                   inside = false;
  double                                 start  = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    bool const neg = negative(x[i]);
    if (neg && !inside)
    {
      start  = i == 0 ? x[0] : boundary(x[i - 1], x[i]);
      inside = true;
    }
    else if (!neg && inside)
    {
      out.emplace_back(start, boundary(x[i - 1], x[i]));
      inside = false;
    }
  }
  if (inside)
  {
    out.emplace_back(start, x.back());
  }
  return out;
}

ShadingStrategy clip_virtualized_bid(ShadingStrategy const &s, ValueDistribution const &d, int grid_size)
{
  auto const intervals = negative_virtual_intervals(s, d, grid_size);
  if (intervals.empty())
  {
    return s;
  }
  auto const mass = [&](double x) { return bid(s, x) * d.survival(x); };
  std::vector<family::PatchSegment> segments;
  double                            lift  = 0.0;  // accumulated -int h f to the right
  double                            right = intervals.back().second;
  for (auto it = intervals.rbegin(); it != intervals.rend(); ++it)
  {
    auto const [a, b] = *it;
    if (lift > 0.0 && right > b)
    {
      segments.push_back({b, right, false, lift});
    }
    segments.push_back({a, b, true, mass(b) + lift});
    lift += std::max(0.0, mass(b) - mass(a));
    right = a;
  }
  double const lo = d.truncated_support().lo;
  if (lift > 0.0 && right > lo)
  {
    segments.push_back({lo, right, false, lift});
  }
  return patched(s, d, std::move(segments));
}

double seller_revenue(BidDistribution const &bd, double r)
{
  return r * bd.survival(r);
}

RevenueCurve seller_revenue_curve(BidDistribution const &bd, int grid_size)
{
  if (grid_size < 3)
  {
    throw DomainError("revenue curve needs at least three reserves");
  }
  RevenueCurve c;
  double const lo = bd.min_bid();
  double const hi = bd.max_bid();
  c.reserve.resize(grid_size);
  c.revenue.resize(grid_size);
  std::size_t best = 0;
  for (int i = 0; i < grid_size; ++i)
  {
    double const r = lo + (hi - lo) * i / (grid_size - 1);
    c.reserve[i]   = r;
    c.revenue[i]   = seller_revenue(bd, r);
    if (c.revenue[i] > c.revenue[best])
    {
      best = i;
    }
  }

  // Golden-section refinement around the best sample.
  double a = c.reserve[best == 0 ? 0 : best - 1];
  double b = c.reserve[std::min<std::size_t>(best + 1, grid_size - 1)];
  double const invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double       x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double       f1 = seller_revenue(bd, x1), f2 = seller_revenue(bd, x2);
  for (int k = 0; k < 100 && b - a > 1e-13; ++k)
  {
    if (f1 > f2)
    {
      b  = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = seller_revenue(bd, x1);
    }
    else
    {
      a  = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = seller_revenue(bd, x2);
    }
  }
  double const rg = 0.5 * (a + b);
  double const vg = seller_revenue(bd, rg);
  if (vg > c.revenue[best])
  {
    c.argmax = rg;
    c.max    = vg;
  }
  else
  {
    c.argmax = c.reserve[best];
    c.max    = c.revenue[best];
  }

  double const cut  = c.max - 1e-6 * std::abs(c.max);
  c.welfare_reserve = c.argmax;
  for (int i = 0; i < grid_size; ++i)
  {
    if (c.revenue[i] >= cut)
    {
      c.near_optimal.push_back(c.reserve[i]);
    }
  }
  if (!c.near_optimal.empty())
  {
    c.welfare_reserve = std::min(c.welfare_reserve, c.near_optimal.front());
  }
  return c;
}

}  // namespace bidshade
