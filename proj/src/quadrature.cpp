#include "bidshade/quadrature.hpp"

#include "bidshade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace bidshade::quad {

namespace {

Rule make_rule(int n)
{
  Rule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
  {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double x  = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it)
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k)
      {
        double const p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0              = p1;
        p1              = p2;
      }
      dp              = n * (x * p1 - p0) / (x * x - 1.0);
      double const dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
      {
        break;
      }
    }
    rule.nodes[static_cast<std::size_t>(i)]   = x;
    rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

Rule const &gauss_legendre(int n)
{
  static std::mutex          mu;
  static std::map<int, Rule> cache;
  std::lock_guard            lock(mu);
  auto                       it = cache.find(n);
  if (it == cache.end())
  {
    it = cache.emplace(n, make_rule(n)).first;
  }
  return it->second;
}

double pairwise_sum(std::span<double const> terms)
{
  if (terms.size() <= 8)
  {
    double s = 0.0;
    for (double t : terms)
    {
      s += t;
    }
    return s;
  }
  std::size_t const half = terms.size() / 2;
  return pairwise_sum(terms.subspan(0, half)) + pairwise_sum(terms.subspan(half));
}

double integrate(Integrand const &fn, double a, double b, std::span<double const> breakpoints,
                 Options const &opts)
{
  if (!(b > a))
  {
    return 0.0;
  }
  std::vector<double> edges{a};
  for (double p : breakpoints)
  {
    if (p > a && p < b)
    {
      edges.push_back(p);
    }
  }
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Rule const         &rule      = gauss_legendre(opts.order);
  double const        max_width = (b - a) / std::max(1, opts.panels);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(opts.panels + static_cast<int>(edges.size())) *
                rule.nodes.size());
  for (std::size_t e = 0; e + 1 < edges.size(); ++e)
  {
    double const lo     = edges[e];
    double const hi     = edges[e + 1];
    int const    panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_width - 1e-9)));
    double const width  = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p)
    {
      double const pa   = lo + p * width;
      double const half = 0.5 * width;
      double const mid  = pa + half;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k)
      {
        terms.push_back(half * rule.weights[k] * fn(mid + half * rule.nodes[k]));
      }
    }
  }
  return pairwise_sum(terms);
}

double bisect(Integrand const &fn, double lo, double hi, int iterations)
{
  double flo = fn(lo);
  if (flo == 0.0)
  {
    return lo;
  }
  double fhi = fn(hi);
  if (fhi == 0.0)
  {
    return hi;
  }
  if ((flo > 0.0) == (fhi > 0.0))
  {
    throw NumericError("bisection interval does not bracket a root");
  }
  for (int i = 0; i < iterations; ++i)
  {
    double const mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
    {
      break;
    }
    double const fm = fn(mid);
    if (fm == 0.0)
    {
      return mid;
    }
    if ((fm > 0.0) == (flo > 0.0))
    {
      lo  = mid;
      flo = fm;
    }
    else
    {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> crossings(Integrand const &fn, std::span<double const> levels, double a, double b,
                              int grid)
{
  std::vector<double> out;
  if (!(b > a) || grid < 2)
  {
    return out;
  }
  std::vector<double> xs(static_cast<std::size_t>(grid));
  std::vector<double> ys(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i)
  {
    xs[static_cast<std::size_t>(i)] = a + (b - a) * i / (grid - 1);
    ys[static_cast<std::size_t>(i)] = fn(xs[static_cast<std::size_t>(i)]);
  }
  for (double level : levels)
  {
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    {
      double const y0 = ys[i] - level;
      double const y1 = ys[i + 1] - level;
      if (!std::isfinite(y0) || !std::isfinite(y1))
      {
        continue;
      }
      if ((y0 < 0.0 && y1 >= 0.0) || (y0 >= 0.0 && y1 < 0.0))
      {
        out.push_back(bisect([&](double x) { return fn(x) - level; }, xs[i], xs[i + 1]));
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace bidshade::quad
