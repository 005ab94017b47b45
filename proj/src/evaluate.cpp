#include "bidshade/evaluate.hpp"

#include "bidshade/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

namespace bidshade {

namespace {

// Welford accumulator; shards are merged in index order.
struct Moments
{
  double      mean = 0.0;
  double      m2   = 0.0;
  std::size_t n    = 0;

  void add(double v)
  {
    ++n;
    double const delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }

  void merge(Moments const &o)
  {
    if (o.n == 0)
    {
      return;
    }
    std::size_t const tot   = n + o.n;
    double const      delta = o.mean - mean;
    mean += delta * static_cast<double>(o.n) / static_cast<double>(tot);
    m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / static_cast<double>(tot);
    n = tot;
  }

  UtilityEstimate estimate(std::uint64_t seed) const
  {
    UtilityEstimate e;
    e.mean      = mean;
    e.n         = n;
    e.seed      = seed;
    e.std_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return e;
  }
};

// Threshold lookup for the Myerson payment: the first value whose
// virtualized bid reaches a level, via a running maximum of h on a grid.
struct ThresholdTable
{
  std::vector<double> x;
  std::vector<double> h;
  std::vector<double> hmax;

  ThresholdTable(ShadingStrategy const &s, ValueDistribution const &d)
    : x(value_grid(d, 4096, kinks(s, d)))
  {
    h.reserve(x.size());
    hmax.reserve(x.size());
    for (double t : x)
    {
      h.push_back(virtualized_bid(s, d, t));
      hmax.push_back(hmax.empty() ? h.back() : std::max(hmax.back(), h.back()));
    }
  }

  double first_reaching(double level) const
  {
    auto const i = static_cast<std::size_t>(std::lower_bound(hmax.begin(), hmax.end(), level) - hmax.begin());
    if (i == 0)
    {
      return x.front();
    }
    if (i == x.size())
    {
      return x.back();
    }
    double const h0 = h[i - 1], h1 = h[i];
    double const t  = h1 > h0 ? std::clamp((level - h0) / (h1 - h0), 0.0, 1.0) : 1.0;
    return x[i - 1] + t * (x[i] - x[i - 1]);
  }
};

struct Round
{
  double utility;
  double payment;
};

class Simulator
{
public:
  Simulator(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d)
    : spec_(spec)
    , s_(s)
    , d_(d)
    , Z_(spec)
    , opp_reserve_(spec.opponent_reserve_price())
  {
    spec.validate();
    if (auto bad = find_decrease(s, d))
    {
      throw MonotonicityError(bad->first, bad->second);
    }
    switch (spec.format)
    {
    case Format::LazySecondPrice:
    case Format::EagerSecondPrice:
      reserve_ = spec.strategic_reserve_override ? *spec.strategic_reserve_override
                                                 : bid(s, reserve_value(s, d));
      break;
    case Format::Myerson:
      table_ = std::make_unique<ThresholdTable>(s, d);
      break;
    case Format::BoostedSecondPrice: {
      auto const fit = bsp_fit(BidDistribution(d, s, 512, DensityMode::Analytic), spec.bsp_variant);
      slope_         = fit.slope;
      intercept_     = fit.intercept;
      reserve_       = fit.reserve;
      if (!(slope_ > 0.0))
      {
        throw NumericError("boosted second price needs an increasing fitted virtual value");
      }
      break;
    }
    }
  }

  Round play(std::mt19937_64 &gen) const
  {
    double const x   = d_.quantile(unit_uniform(gen()));
    int const    m   = spec_.K - 1;
    double       top = -1.0;  // best competing quantity
    int          ties = 0;
    double       zmax = 0.0;  // Myerson/BSP: max(0, opponents' virtual values)
    for (int j = 0; j < m; ++j)
    {
      double const y = spec_.opponent.quantile(unit_uniform(gen()));
      switch (spec_.format)
      {
      case Format::LazySecondPrice:
        track(y, top, ties);
        break;
      case Format::EagerSecondPrice:
        if (y >= opp_reserve_)
        {
          track(y, top, ties);
        }
        break;
      case Format::Myerson:
      case Format::BoostedSecondPrice: {
        double const psi = Z_.opponent_virtual_value(y);
        if (psi >= 0.0)
        {
          track(psi, top, ties);
          zmax = std::max(zmax, psi);
        }
        break;
      }
      }
    }
    double const tie = unit_uniform(gen());
    auto const   wins_tie = [&](double mine) {
      if (mine > top)
      {
        return true;
      }
      if (mine < top)
      {
        return false;
      }
      return tie * (ties + 1) < 1.0;
    };

    double const b = bid(s_, x);
    switch (spec_.format)
    {
    case Format::LazySecondPrice:
    case Format::EagerSecondPrice: {
      if (b < reserve_ || (top >= 0.0 && !wins_tie(b)))
      {
        return {0.0, 0.0};
      }
      double const pay = std::max(std::max(top, 0.0), reserve_);
      return {x - pay, pay};
    }
    case Format::Myerson: {
      double const h = virtualized_bid(s_, d_, x);
      if (h < -kVirtualTol)
      {
        return {0.0, 0.0};
      }
      double const mine = std::max(h, 0.0);
      if (top >= 0.0 && !wins_tie(mine))
      {
        return {0.0, 0.0};
      }
      double const level = zmax > 0.0 ? zmax : -kVirtualTol;
      double const pay   = bid(s_, table_->first_reaching(level));
      return {x - pay, pay};
    }
    case Format::BoostedSecondPrice: {
      if (b < reserve_)
      {
        return {0.0, 0.0};
      }
      double const mine = std::max(slope_ * b + intercept_, 0.0);
      if (top >= 0.0 && !wins_tie(mine))
      {
        return {0.0, 0.0};
      }
      double const pay = std::max(reserve_, (zmax - intercept_) / slope_);
      return {x - pay, pay};
    }
    }
    return {0.0, 0.0};
  }

private:
  static void track(double v, double &top, int &ties)
  {
    if (v > top)
    {
      top  = v;
      ties = 1;
    }
    else if (v == top)
    {
      ++ties;
    }
  }

  AuctionSpec const              &spec_;
  ShadingStrategy const          &s_;
  ValueDistribution const        &d_;
  FzDistribution                  Z_;
  double                          opp_reserve_;
  double                          reserve_   = 0.0;
  double                          slope_     = 0.0;
  double                          intercept_ = 0.0;
  std::unique_ptr<ThresholdTable> table_;
};

}  // namespace

int worker_threads()
{
  if (char const *env = std::getenv("BIDSHADE_THREADS"))
  {
    int const v = std::atoi(env);
    if (v >= 1)
    {
      return v;
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

McOutcome simulate(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d, std::size_t n,
                   std::uint64_t seed)
{
  if (n == 0)
  {
    throw std::invalid_argument("Monte Carlo needs at least one sample");
  }
  Simulator const        sim(spec, s, d);
  std::vector<Moments>   util(kMcShards), pay(kMcShards);
  std::atomic<int>       next{0};
  auto const             work = [&]() {
    for (int shard = next++; shard < kMcShards; shard = next++)
    {
      std::size_t const count = n / kMcShards + (static_cast<std::size_t>(shard) < n % kMcShards ? 1 : 0);
      std::mt19937_64   gen((seed << 20) + static_cast<std::uint64_t>(shard));
      for (std::size_t i = 0; i < count; ++i)
      {
        Round const r = sim.play(gen);
        util[shard].add(r.utility);
        pay[shard].add(r.payment);
      }
    }
  };
  int const                threads = std::min(worker_threads(), kMcShards);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t)
  {
    pool.emplace_back(work);
  }
  work();
  for (auto &t : pool)
  {
    t.join();
  }
  Moments u, p;
  for (int k = 0; k < kMcShards; ++k)
  {
    u.merge(util[k]);
    p.merge(pay[k]);
  }
  return {u.estimate(seed), p.estimate(seed)};
}

UtilityEstimate mc_utility(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
                           std::size_t n, std::uint64_t seed)
{
  return simulate(spec, s, d, n, seed).utility;
}

UtilityEstimate mc_seller_payment(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
                                  std::size_t n, std::uint64_t seed)
{
  return simulate(spec, s, d, n, seed).payment;
}

LemmaCheck myerson_lemma_check(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
                               std::size_t n, std::uint64_t seed)
{
  return {mc_seller_payment(spec, s, d, n, seed), expected_payment(spec, s, d)};
}

Baselines baselines(AuctionSpec const &spec, ValueDistribution const &d, std::size_t n, std::uint64_t seed)
{
  AuctionSpec lazy = spec;
  lazy.format      = Format::LazySecondPrice;
  lazy.strategic_reserve_override.reset();
  Baselines out;
  out.revenue_max_truthful         = mc_utility(lazy, truthful(), d, n, seed);
  lazy.strategic_reserve_override = 0.0;
  out.welfare_truthful             = mc_utility(lazy, truthful(), d, n, seed);
  return out;
}

double uplift(UtilityEstimate const &strategic, UtilityEstimate const &baseline)
{
  if (!(baseline.mean > 0.0))
  {
    throw DomainError("uplift needs a positive baseline");
  }
  return 100.0 * (strategic.mean - baseline.mean) / baseline.mean;
}

void write_results_csv(std::ostream &os, ExperimentResult const &result, std::string const &metadata)
{
  os << "# " << metadata << '\n';
  os << "auction,K,prior,strategy,utility_mean,utility_stderr,uplift_pct,n,seed\n";
  os << std::setprecision(10);
  for (auto const &r : result.rows)
  {
    os << r.auction << ',' << r.K << ',' << r.prior << ',' << r.strategy << ',' << r.estimate.mean << ','
       << r.estimate.std_error << ',' << r.uplift_pct << ',' << r.estimate.n << ',' << r.estimate.seed << '\n';
  }
}

}  // namespace bidshade
