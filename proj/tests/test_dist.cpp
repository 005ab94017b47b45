#include "doctest.h"

#include "bidshade/dist.hpp"
#include "bidshade/errors.hpp"

#include <cmath>
#include <numeric>

using namespace bidshade;

TEST_CASE("virtual value of uniform and exponential")
{
  auto const u = ValueDistribution::uniform();
  auto const e = ValueDistribution::exponential(1.0);
  CHECK(virtual_value(u, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(virtual_value(u, 0.75) == doctest::Approx(0.5));
  CHECK(std::abs(virtual_value(e, 1.0)) < 1e-12);
  CHECK_THROWS_AS(virtual_value(u, 1.5), DomainError);
  CHECK_THROWS_AS(virtual_value(e, -0.1), DomainError);
}

TEST_CASE("monopoly prices")
{
  CHECK(monopoly_price(ValueDistribution::uniform()) == doctest::Approx(0.5));
  CHECK(monopoly_price(ValueDistribution::exponential(1.0)) == doctest::Approx(1.0));
  CHECK(monopoly_price(ValueDistribution::generalized_pareto(0, 1, -1)) == doctest::Approx(0.5));
  CHECK(monopoly_price(ValueDistribution::exponential(2.0)) == doctest::Approx(0.5));
}

TEST_CASE("monopoly price beats a fine grid")
{
  for (auto const &d : {ValueDistribution::uniform(0.2, 1.7), ValueDistribution::exponential(0.7),
                        ValueDistribution::generalized_pareto(0.1, 1.3, 0.3)})
  {
    double const r    = monopoly_price(d);
    double const best = r * (1.0 - d.cdf(r));
    double const hi   = d.truncated_support().hi;
    for (int i = 0; i < 10000; ++i)
    {
      double const x = d.support().lo + (hi - d.support().lo) * i / 9999.0;
      CHECK(x * (1.0 - d.cdf(x)) <= best + 1e-8);
    }
  }
}

TEST_CASE("hazard rate")
{
  CHECK(hazard_rate(ValueDistribution::exponential(1.0), 3.0) == doctest::Approx(1.0));
  CHECK(hazard_rate(ValueDistribution::uniform(), 0.5) == doctest::Approx(2.0));
  CHECK(hazard_rate(ValueDistribution::uniform(), 0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(hazard_rate(ValueDistribution::uniform(), 1.0), DomainError);
}

TEST_CASE("quantile and cdf round trip")
{
  for (auto const &d : {ValueDistribution::uniform(), ValueDistribution::exponential(1.0),
                        ValueDistribution::generalized_pareto(0.5, 2.0, 0.4),
                        ValueDistribution::generalized_pareto(0.0, 1.0, -0.5)})
  {
    for (int i = 0; i < 1000; ++i)
    {
      double const p = 0.001 + 0.998 * i / 999.0;
      CHECK(std::abs(d.cdf(d.quantile(p)) - p) <= 1e-9);
      CHECK(std::abs(d.survival(d.quantile(p)) - (1.0 - p)) <= 1e-9);
      CHECK(std::abs(d.survival_quantile(1.0 - p) - d.quantile(p)) <= 1e-9 * std::max(1.0, d.quantile(p)));
    }
  }
}

TEST_CASE("GP support and parameterizations")
{
  auto const g = ValueDistribution::generalized_pareto(1.0, 2.0, -0.5);
  CHECK(g.support().hi == doctest::Approx(5.0));
  auto const u = ValueDistribution::uniform();
  auto const gu = ValueDistribution::generalized_pareto(0, 1, -1);
  for (double x : {0.1, 0.4, 0.9})
  {
    CHECK(u.cdf(x) == doctest::Approx(gu.cdf(x)));
    CHECK(u.pdf(x) == doctest::Approx(gu.pdf(x)));
  }
  auto const e  = ValueDistribution::exponential(1.0);
  auto const ge = ValueDistribution::generalized_pareto(0, 1, 0);
  for (double x : {0.1, 1.0, 5.0})
  {
    CHECK(e.cdf(x) == doctest::Approx(ge.cdf(x)));
    CHECK(e.pdf_derivative(x) == doctest::Approx(ge.pdf_derivative(x)));
  }
  CHECK_THROWS_AS(ValueDistribution::generalized_pareto(0, 1, 1.0), DomainError);
  CHECK_THROWS_AS(ValueDistribution::uniform(1, 1), DomainError);
}

TEST_CASE("virtual value is affine for GP priors")
{
  for (auto const &d : {ValueDistribution::uniform(0.3, 2.0), ValueDistribution::exponential(1.5),
                        ValueDistribution::generalized_pareto(0.2, 1.0, 0.3)})
  {
    double const c  = d.virtual_value_slope();
    double const rs = d.virtual_value_root();
    double const hi = d.truncated_support().hi;
    for (int i = 1; i < 100; ++i)
    {
      double const x = d.support().lo + (hi - d.support().lo) * i / 100.0;
      CHECK(std::abs(virtual_value(d, x) - c * (x - rs)) <= 1e-9 * std::max(1.0, x));
    }
  }
}

TEST_CASE("virtual value from numeric cdf and pdf")
{
  for (auto const &d : {ValueDistribution::uniform(), ValueDistribution::exponential(1.0)})
  {
    double const hi = d.quantile(0.99);
    for (int i = 1; i < 50; ++i)
    {
      double const x     = hi * i / 50.0;
      double const step  = 1e-6;
      double const fnum  = (d.cdf(x + step) - d.cdf(x - step)) / (2 * step);
      double const psinum = x - (1.0 - d.cdf(x)) / fnum;
      CHECK(std::abs(psinum - virtual_value(d, x)) <= 1e-6 * std::max(1.0, x));
    }
  }
}

TEST_CASE("pdf derivative matches finite differences")
{
  auto const g = ValueDistribution::generalized_pareto(0.0, 1.0, 0.3);
  for (double x : {0.2, 1.0, 3.0})
  {
    double const fd = (g.pdf(x + 1e-6) - g.pdf(x - 1e-6)) / 2e-6;
    CHECK(g.pdf_derivative(x) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("sampling is deterministic and unbiased")
{
  auto const u = ValueDistribution::uniform();
  CHECK(sample(u, 3, 0).empty());
  CHECK(sample(u, 11, 1000) == sample(u, 11, 1000));
  CHECK(sample(u, 11, 10) != sample(u, 12, 10));
  auto const xs   = sample(u, 5, 1000000);
  double const m  = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  CHECK(std::abs(m - 0.5) < 0.002);
}

TEST_CASE("exponential truncation")
{
  auto const e = ValueDistribution::exponential(1.0);
  CHECK(e.truncated_support().hi == doctest::Approx(-std::log(1e-9)).epsilon(1e-7));
  CHECK_FALSE(e.support().bounded());
  CHECK(ValueDistribution::uniform().truncated_support().hi == 1.0);
}
