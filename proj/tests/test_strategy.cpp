#include "doctest.h"

#include "bidshade/errors.hpp"
#include "bidshade/strategy.hpp"

#include <cmath>

using namespace bidshade;

namespace {

// The eps -> 0 shading against K - 1 uniform opponents, written out by hand.
double myerson_beta_limit(int K, double x)
{
  double const k = K;
  if (x >= 1.0 / (k - 1.0))
  {
    return (k - 1.0) / k * ((1.0 + x) / 2.0 - 1.0 / (k - 1.0));
  }
  return (k - 2.0) * (k - 2.0) / (2.0 * (k - 1.0) * k) / (1.0 - x);
}

}  // namespace

TEST_CASE("bids of simple families")
{
  auto const u = ValueDistribution::uniform();
  CHECK(bid(truthful(), 0.7) == 0.7);
  CHECK(bid(affine(0.5, 0.0), 0.8) == doctest::Approx(0.4));
  auto const te = thresholded_extension(truthful(), u, 0.5);
  CHECK(bid(te, 0.0) == doctest::Approx(0.25));
  CHECK(bid(te, 0.5) == doctest::Approx(0.5));
  CHECK(bid(te, 0.8) == doctest::Approx(0.8));
  auto const e = ValueDistribution::exponential(1.0);
  CHECK(bid(thresholded_extension(truthful(), e, 1.0), 0.0) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(thresholded_extension(truthful(), u, 1.0), DomainError);
  CHECK_THROWS_AS(thresholded_extension(truthful(), u, -0.2), DomainError);
}

TEST_CASE("bid derivatives")
{
  auto const u = ValueDistribution::uniform();
  CHECK(bid_derivative(truthful(), 0.3) == 1.0);
  auto const sp = spline({0.5}, {0.0, 1.0, 1.0});
  CHECK(bid_derivative(sp, 0.75) == doctest::Approx(2.0));
  CHECK(bid_derivative(sp, 0.25) == doctest::Approx(1.0));
  CHECK(bid_derivative(sp, 0.5) == doctest::Approx(2.0));
  CHECK(bid(sp, 0.75) == doctest::Approx(1.0));
  auto const te = thresholded_extension(truthful(), u, 0.5);
  CHECK(bid_derivative(te, 0.25) == doctest::Approx(4.0 / 9.0));
  CHECK_THROWS_AS(spline({0.5, 0.4}, {0, 1, 0, 0}), DomainError);
  CHECK_THROWS_AS(spline({0.5}, {0, 1}), DomainError);
}

TEST_CASE("virtualized bids")
{
  auto const u = ValueDistribution::uniform();
  for (double x : {0.1, 0.5, 0.9})
  {
    CHECK(virtualized_bid(truthful(), u, x) == doctest::Approx(2 * x - 1));
    CHECK(virtualized_bid(affine(0.7, 0.0), u, x) == doctest::Approx(0.7 * (2 * x - 1)));
  }
  auto const te = thresholded_extension(truthful(), u, 0.5);
  CHECK(std::abs(virtualized_bid(te, u, 0.3)) < 1e-12);
  CHECK(std::abs(virtualized_bid(te, u, 0.2)) < 1e-12);
  CHECK(virtualized_bid(te, u, 0.7) == doctest::Approx(0.4));
  CHECK_THROWS_AS(virtualized_bid(truthful(), u, 1.2), DomainError);
}

TEST_CASE("f h equals the derivative of beta (F - 1)")
{
  auto const e  = ValueDistribution::exponential(1.0);
  auto const te = thresholded_extension(affine(0.8, 0.1), e, 1.5);
  auto const sp = spline({0.5, 2.0}, {0.2, 0.5, 0.3, -0.2});
  for (auto const &s : {te, sp, affine(0.6, 0.2)})
  {
    for (double x : {0.3, 1.0, 1.7, 3.0})
    {
      double const step = 1e-6;
      auto const   g    = [&](double t) { return bid(s, t) * (e.cdf(t) - 1.0); };
      double const lhs  = e.pdf(x) * virtualized_bid(s, e, x);
      double const rhs  = (g(x + step) - g(x - step)) / (2 * step);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
  }
}

TEST_CASE("virtualized bid derivative")
{
  auto const e  = ValueDistribution::exponential(1.0);
  auto const g  = ValueDistribution::generalized_pareto(0.0, 1.0, 0.25);
  auto const te = thresholded_extension(truthful(), e, 1.0);
  auto const tb = strategy_from_virtualized([](double x) { return x * x - 1.0; }, g);
  for (auto const &[s, d] : {std::pair{te, e}, std::pair{affine(0.5, 0.3), g}, std::pair{tb, g}})
  {
    for (double x : {0.4, 1.3, 2.2})
    {
      double const step = 1e-5;
      double const fd   = (virtualized_bid(s, d, x + step) - virtualized_bid(s, d, x - step)) / (2 * step);
      CHECK(virtualized_bid_derivative(s, d, x) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("strategy from virtualized bids")
{
  auto const u  = ValueDistribution::uniform();
  auto const id = strategy_from_virtualized([](double x) { return 2 * x - 1; }, u);
  for (double x : {0.0, 0.2, 0.77, 1.0})
  {
    CHECK(bid(id, x) == doctest::Approx(x).epsilon(1e-9).scale(1.0));
    CHECK(bid_derivative(id, x) == doctest::Approx(1.0).epsilon(1e-6));
  }
  auto const e  = ValueDistribution::exponential(1.0);
  auto const c  = strategy_from_virtualized([](double) { return 0.3; }, e);
  for (double x : {0.0, 2.0, 15.0})
  {
    CHECK(bid(c, x) == doctest::Approx(0.3).epsilon(1e-9));
  }
  auto const idx = strategy_from_virtualized([](double x) { return x - 1.0; }, e);
  for (double x : {0.0, 1.0, 10.0, 20.0})
  {
    CHECK(bid(idx, x) == doctest::Approx(x).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("round trip of nondecreasing virtualized bids")
{
  auto const u = ValueDistribution::uniform();
  auto const e = ValueDistribution::exponential(1.0);
  auto const g = ValueDistribution::generalized_pareto(0.0, 1.0, -0.4);
  RealMap const hs[] = {[](double x) { return x * x - 0.3; }, [](double x) { return std::tanh(3 * x - 1); },
                        [](double x) { return x < 0.6 ? 0.0 : x - 0.6; }};
  for (auto const &d : {u, e, g})
  {
    double const lo = d.support().lo;
    double const hi = d.truncated_support().hi;
    for (auto const &h : hs)
    {
      auto const s   = strategy_from_virtualized(h, d, {0.6});
      double     err = 0.0;
      for (int i = 1; i < 1000; ++i)
      {
        double const x = lo + (hi - lo) * i / 1000.0;
        err            = std::max(err, std::abs(virtualized_bid(s, d, x) - h(x)));
      }
      CHECK(err < 1e-3);
    }
  }
}

TEST_CASE("closed-form Myerson shading against uniform opponents")
{
  auto const u  = ValueDistribution::uniform();
  auto const s4 = myerson_uniform_closed_form(4, 0.0, u);
  CHECK(bid(s4, 1.0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(bid(s4, 0.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
  for (int K : {3, 4, 5})
  {
    auto const s = myerson_uniform_closed_form(K, 0.0, u);
    for (int i = 0; i <= 20; ++i)
    {
      double const x = i / 20.0;
      CHECK(bid(s, x) == doctest::Approx(myerson_beta_limit(K, x)).epsilon(1e-8).scale(1.0));
    }
  }
  CHECK(myerson_default_eps(4, u) == 1e-6);
  CHECK(myerson_default_eps(3, ValueDistribution::uniform(0.6, 1.9)) == 0.0);
  auto const h = myerson_uniform_virtualized(3, 1e-6);
  CHECK(h(0.25) == doctest::Approx(2.0 / 3.0 * 1e-6 / (1 + 1e-6) * 0.25));
  CHECK(h(0.8) == doctest::Approx(2.0 / 3.0 * 0.3));
  CHECK_THROWS_AS(myerson_uniform_closed_form(3, 0.0, ValueDistribution::exponential(1.0)), DomainError);
  CHECK_THROWS_AS(myerson_uniform_closed_form(3, 0.0, ValueDistribution::uniform(0, 3)), DomainError);
  CHECK_THROWS_AS(myerson_uniform_closed_form(1, 0.0, u), DomainError);
}

TEST_CASE("GP Myerson shading")
{
  auto const e = ValueDistribution::exponential(1.0);
  auto const h = myerson_gp_virtualized(e, 2);
  CHECK(std::abs(h(std::exp(1.0) - 1.0)) < 1e-9);
  CHECK(h(0.5) == 0.0);
  for (double t : {0.1, 0.5, 2.0})
  {
    double const x = t + std::exp(t + 1.0) - 1.0;
    CHECK(h(x) == doctest::Approx(t).epsilon(1e-9));
  }
  auto const u = ValueDistribution::uniform();
  for (int K : {2, 3, 4})
  {
    auto const hg = myerson_gp_virtualized(u, K);
    auto const hu = myerson_uniform_virtualized(K, 0.0);
    for (int i = 0; i <= 100; ++i)
    {
      double const x = i / 100.0;
      CHECK(std::abs(hg(x) - std::max(0.0, hu(x))) < 1e-9);
    }
  }
  auto const s = myerson_gp_closed_form(e, 2, e);
  CHECK(virtualized_bid(s, e, 3.0) == doctest::Approx(h(3.0)).epsilon(1e-3));
}

TEST_CASE("mlp derivatives agree with finite differences")
{
  auto const   u   = ValueDistribution::uniform();
  auto const   net = mlp_init(200, 42, u);
  auto const   s   = mlp(net);
  auto const   ks  = kinks(s, u);
  for (int i = 1; i < 40; ++i)
  {
    double const x    = i / 40.0;
    double const step = 1e-5;
    bool         near = false;
    for (double k : ks)
    {
      near = near || std::abs(k - x) < 2 * step;
    }
    if (near)
    {
      continue;
    }
    double const fd = (bid(s, x + step) - bid(s, x - step)) / (2 * step);
    CHECK(bid_derivative(s, x) == doctest::Approx(fd).epsilon(1e-4));
  }
  // The initial network bids close to truthfully.
  for (double x : {0.1, 0.5, 0.9})
  {
    CHECK(std::abs(bid(s, x) - x) < 0.02);
  }
  CHECK(mlp_init(200, 42, u).w_in == net.w_in);
}

TEST_CASE("tabulated strategies")
{
  auto const t = tabulated({0.0, 0.5, 0.5, 1.0}, {0.0, 0.5, 0.5, 1.5}, {1.0, 1.0, 2.0, 2.0});
  CHECK(bid(t, 0.25) == doctest::Approx(0.25));
  CHECK(bid_derivative(t, 0.5) == doctest::Approx(2.0));
  CHECK(bid_derivative(t, 0.4999) == doctest::Approx(1.0));
  CHECK(bid(t, 0.75) == doctest::Approx(1.0));
  CHECK(kinks(t, ValueDistribution::uniform()) == std::vector<double>{0.5});
  CHECK_THROWS_AS(tabulated({0.0, 0.5, 0.5, 0.5, 1.0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}), DomainError);
}

TEST_CASE("patched strategies keep h of the base where shifted")
{
  auto const u = ValueDistribution::uniform();
  auto const p = patched(truthful(), u, {{0.0, 0.2, false, 0.05}, {0.2, 0.5, true, 0.25}});
  CHECK(bid(p, 0.3) == doctest::Approx(0.25 / 0.7));
  CHECK(std::abs(virtualized_bid(p, u, 0.3)) < 1e-12);
  CHECK(virtualized_bid(p, u, 0.1) == doctest::Approx(2 * 0.1 - 1));
  CHECK(bid(p, 0.1) == doctest::Approx(0.1 + 0.05 / 0.9));
  CHECK(bid(p, 0.7) == 0.7);
}

TEST_CASE("monotonicity scan")
{
  auto const u = ValueDistribution::uniform();
  CHECK_FALSE(find_decrease(truthful(), u).has_value());
  auto const bad = find_decrease(spline({0.5}, {0.0, 1.0, -2.0}), u);
  REQUIRE(bad.has_value());
  CHECK(bad->first == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(bad->second == doctest::Approx(1.0));
}

TEST_CASE("thresholded extension is monotone")
{
  auto const e = ValueDistribution::exponential(1.0);
  for (double r : {0.3, 1.0, 2.5})
  {
    CHECK_FALSE(find_decrease(thresholded_extension(affine(0.9, 0.05), e, r), e).has_value());
  }
}
