#include "doctest.h"

#include "bidshade/certify.hpp"
#include "bidshade/errors.hpp"

#include <cmath>

using namespace bidshade;

namespace {

// Composite Simpson with n (even) intervals.
template <typename Fn>
double simpson(Fn const &fn, double a, double b, int n = 2000)
{
  double const h   = (b - a) / n;
  double       sum = fn(a) + fn(b);
  for (int i = 1; i < n; ++i)
  {
    sum += (i % 2 ? 4.0 : 2.0) * fn(a + i * h);
  }
  return sum * h / 3.0;
}

AuctionSpec lazy_against(ValueDistribution const &opp)
{
  AuctionSpec spec;
  spec.format   = Format::LazySecondPrice;
  spec.K        = 2;
  spec.opponent = opp;
  return spec;
}

}  // namespace

TEST_CASE("slack functions validate their endpoints and sign")
{
  CHECK_THROWS_AS(SlackFunction::sample([](double x) { return x; }, 0.0, 0.5), InfeasibleSlackError);
  CHECK_THROWS_AS(SlackFunction::sample([](double x) { return -x * (0.5 - x); }, 0.0, 0.5), InfeasibleSlackError);
  CHECK_THROWS_AS(SlackFunction({0.0, 0.0}, {0.0, 0.0}), DomainError);
  auto const h = SlackFunction::sample([](double x) { return x * (0.5 - x); }, 0.0, 0.5, 101);
  CHECK(h(0.25) == doctest::Approx(0.0625));
  CHECK(h.scaled(2.0)(0.25) == doctest::Approx(0.125));
}

TEST_CASE("feasible family against uniform competition")
{
  auto const u = ValueDistribution::uniform();
  auto const s0 = feasible_family_uniformG(u, 0.5, SlackFunction::zero(0.0, 0.5));
  for (double x : {0.0, 0.1, 0.3, 0.49})
  {
    CHECK(bid(s0, x) == doctest::Approx(0.25 / (1.0 - x)).epsilon(1e-12));
  }
  CHECK(bid(s0, 0.8) == doctest::Approx(0.8));

  // Seller revenue on [x, r] equals -h(x), checked with a difference-quotient
  // derivative of the bid.
  double const eps = 0.3;
  auto const   h   = SlackFunction::sample([&](double x) { return eps * x * (0.5 - x); }, 0.0, 0.5, 1025);
  auto const   s   = feasible_family_uniformG(u, 0.5, h);
  auto const   rate = [&](double t) {
    double const d  = 1e-6;
    double const b  = bid(s, t);
    double const db = (bid(s, std::min(t + d, 0.5 - 1e-12)) - bid(s, std::max(t - d, 0.0))) /
                      (std::min(t + d, 0.5 - 1e-12) - std::max(t - d, 0.0));
    return (db * (t - 1.0) + b) * b;
  };
  for (double x : {0.05, 0.2, 0.35, 0.45})
  {
    CHECK(simpson(rate, x, 0.5) == doctest::Approx(-eps * x * (0.5 - x)).epsilon(1e-6).scale(1.0));
  }

  CHECK_THROWS_AS(feasible_family_uniformG(u, 0.5, h.scaled(1e4)), InfeasibleSlackError);
  CHECK_THROWS_AS(feasible_family_uniformG(u, 1.0, SlackFunction::zero(0.0, 1.0)), DomainError);
  CHECK_THROWS_AS(feasible_family_uniformG(u, 0.5, SlackFunction::zero(0.1, 0.5)), DomainError);
}

TEST_CASE("buyer value and its first-order term")
{
  auto const u   = ValueDistribution::uniform();
  auto const z   = SlackFunction::zero(0.0, 0.5);
  double const pi0 = 0.25 * (std::log(2.0) - 0.5);
  CHECK(buyer_value_uniformG(u, 0.5, z) == doctest::Approx(pi0).epsilon(1e-12));

  auto const h = SlackFunction::sample([](double x) { return x * (0.5 - x); }, 0.0, 0.5, 1025);
  // Linear term by nested Simpson: (1 / (r S(r))) int x/(1-x) [int_x^r h - h(x)(1-x)] dx.
  double const lin = simpson(
                       [](double x) {
                         double const tail = simpson([](double t) { return t * (0.5 - t); }, x, 0.5, 200);
                         return x / (1.0 - x) * (tail - x * (0.5 - x) * (1.0 - x));
                       },
                       0.0, 0.5, 400) /
                     0.25;
  CHECK(buyer_value_first_order(u, 0.5, h) == doctest::Approx(lin).epsilon(1e-6));
  CHECK(lin < 0.0);

  // Richardson: the remainder shrinks like eps^2.
  double rem[2];
  double const es[2] = {1e-3, 1e-4};
  for (int k = 0; k < 2; ++k)
  {
    rem[k] = buyer_value_uniformG(u, 0.5, h.scaled(es[k])) - pi0 - es[k] * lin;
  }
  CHECK(std::abs(rem[0]) < 1e-5);
  CHECK(std::abs(rem[1]) < std::abs(rem[0]) / 30.0);
}

TEST_CASE("global optimality against uniform competition")
{
  auto const u   = ValueDistribution::uniform();
  auto const rep = global_optimality_test_uniformG(u, 0.5, 100, 11);
  CHECK(rep.pass);
  CHECK(rep.margins.size() == 100);
  for (double m : rep.margins)
  {
    CHECK(m >= -1e-9);
  }
  CHECK(rep.residuals.at(0) < 1e-12);

  auto const bad = global_optimality_test_uniformG(u, 0.7, 5, 1);
  CHECK_FALSE(bad.pass);
  CHECK(bad.margins.empty());

  auto const h = random_slack(0.0, 0.5, 3);
  double const c = feasible_scale_uniformG(u, 0.5, h);
  CHECK(c > 0.0);
  CHECK_NOTHROW(feasible_family_uniformG(u, 0.5, h.scaled(0.99 * c)));
}

TEST_CASE("random slacks are nonnegative bumps vanishing at the ends")
{
  for (std::uint64_t seed = 1; seed < 20; ++seed)
  {
    auto const h = random_slack(0.0, 0.5, seed);
    CHECK(h.h().front() == 0.0);
    CHECK(h.h().back() == 0.0);
    double peak = 0.0;
    for (double v : h.h())
    {
      CHECK(v >= 0.0);
      peak = std::max(peak, v);
    }
    CHECK(peak > 0.0);
  }
}

TEST_CASE("local perturbation value")
{
  auto const u = ValueDistribution::uniform();
  auto const G = competition_cdf(lazy_against(u));
  CHECK(local_perturbation_value(G, u, 0.5, SlackFunction::zero(0.0, 0.5)) == doctest::Approx(0.0));

  // Rearranged form of I for G(b) = b, uniform prior:
  // I = -int x h / ((1-x) b) + int h b' / b^2 int_0^x y / (1-y) dy.
  double const C   = 0.25;
  auto const   hf  = [](double x) { return x * (0.5 - x); };
  auto const   b   = [&](double x) { return C / (1.0 - x); };
  double const alt = simpson(
    [&](double x) {
      double const inner = -x - std::log(1.0 - x);
      double const bp    = C / ((1.0 - x) * (1.0 - x));
      return -x / (1.0 - x) * hf(x) / b(x) + hf(x) * bp / (b(x) * b(x)) * inner;
    },
    0.0, 0.5);
  auto const h = SlackFunction::sample(hf, 0.0, 0.5, 1025);
  CHECK(local_perturbation_value(G, u, 0.5, h) == doctest::Approx(alt).epsilon(1e-6));
  CHECK(alt < 0.0);

  CHECK(local_perturbation_test(G, u, 0.5, 50, 5).pass);

  auto const e  = ValueDistribution::exponential();
  auto const Ge = competition_cdf(lazy_against(e));
  CHECK(local_perturbation_test(Ge, e, 1.0, 50, 6).pass);

  CHECK_THROWS_AS(local_perturbation_value(G, u, 0.7, SlackFunction::zero(0.0, 0.7)), DomainError);
}

TEST_CASE("multiplier of the revenue constraints")
{
  auto const u = ValueDistribution::uniform();
  auto const G = competition_cdf(lazy_against(u));
  auto const k = kkt_multiplier(G, u, 0.5, 1025);
  CHECK(k.multiplier.front() == 0.0);
  // Closed form C0(x) = -x - ln(1 - x), so x - L beta = 2x + ln(1 - x).
  auto const i = static_cast<std::size_t>(512);
  REQUIRE(k.x[i] == doctest::Approx(0.25));
  CHECK(k.bracket[i] == doctest::Approx(0.5 + std::log(0.75)).epsilon(1e-10));
  CHECK(k.bracket[i] == doctest::Approx(0.2123).epsilon(1e-4));
  CHECK(k.ode_residual < 1e-4);
  CHECK(k.identity_residual < 1e-10);
  auto const rep = kkt_report(k);
  CHECK(rep.pass);
  CHECK(rep.residuals.size() == 2);

  auto const e  = ValueDistribution::exponential();
  auto const Ge = competition_cdf(lazy_against(e));
  CHECK(kkt_report(kkt_multiplier(Ge, e, 1.0)).pass);
}

TEST_CASE("seller indifference on the thresholded plateau")
{
  auto const u   = ValueDistribution::uniform();
  auto const rep = seller_indifference_check(thresholded_extension(truthful(), u, 0.5), u, 0.5);
  CHECK(rep.pass);
  CHECK(rep.residuals.at(0) <= 1e-6);
  CHECK(rep.detail.find("plateau value 0.25") != std::string::npos);

  auto const e    = ValueDistribution::exponential();
  auto const repe = seller_indifference_check(thresholded_extension(truthful(), e, 1.0), e, 1.0);
  CHECK(repe.pass);
  CHECK(repe.detail.find("plateau value 0.36787") != std::string::npos);

  CHECK_FALSE(seller_indifference_check(truthful(), u, 0.5).pass);
}

TEST_CASE("relaxation improvement")
{
  auto const u    = ValueDistribution::uniform();
  auto const spec = lazy_against(u);
  auto const plus = relaxation_improvement(truthful(), u, spec);
  auto const th   = thresholded_extension(truthful(), u, 0.5);
  for (double x : {0.0, 0.2, 0.45, 0.7})
  {
    CHECK(bid(plus, x) == doctest::Approx(bid(th, x)).epsilon(1e-9));
  }
  CHECK(&relaxation_improvement(plus, u, spec).repr() == &plus.repr());
  CHECK(&relaxation_improvement(th, u, spec).repr() == &th.repr());
}

TEST_CASE("certificate suites")
{
  auto const u = ValueDistribution::uniform();
  for (auto const &rep : certificate_suite(lazy_against(u), u, 0.5, 20, 3))
  {
    INFO(rep.name << ": " << rep.detail);
    CHECK(rep.pass);
  }
  auto const e     = ValueDistribution::exponential();
  auto const suite = certificate_suite(lazy_against(e), e, 1.0, 20, 3);
  CHECK(suite.size() == 5);
  for (auto const &rep : suite)
  {
    INFO(rep.name << ": " << rep.detail);
    CHECK(rep.pass);
  }
  auto const bad = certificate_suite(lazy_against(u), u, 0.7, 5, 1);
  REQUIRE(bad.size() == 1);
  CHECK_FALSE(bad[0].pass);
}
