#include "doctest.h"

#include "bidshade/evaluate.hpp"
#include "bidshade/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

using namespace bidshade;

namespace {

AuctionSpec make(Format f, int K, ValueDistribution opp = ValueDistribution::uniform())
{
  AuctionSpec s;
  s.format   = f;
  s.K        = K;
  s.opponent = opp;
  return s;
}

void check_agrees(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d)
{
  auto const   mc    = simulate(spec, s, d, 400000, 7);
  double const exact = utility(spec, s, d);
  INFO(format_name(spec.format), " K=", spec.K, " exact=", exact, " mc=", mc.utility.mean);
  CHECK(std::abs(mc.utility.mean - exact) < 4.0 * mc.utility.std_error + 1e-4);
  double const pay = expected_payment(spec, s, d);
  CHECK(std::abs(mc.payment.mean - pay) < 4.0 * mc.payment.std_error + 1e-4);
}

}  // namespace

TEST_CASE("simulation matches the integrated utility")
{
  auto const u  = ValueDistribution::uniform();
  auto const e  = ValueDistribution::exponential(1.0);
  auto const sh = affine(0.8, 0.05);
  for (int K : {2, 3})
  {
    check_agrees(make(Format::LazySecondPrice, K), truthful(), u);
    check_agrees(make(Format::LazySecondPrice, K), sh, u);
    check_agrees(make(Format::EagerSecondPrice, K), sh, u);
    check_agrees(make(Format::Myerson, K), sh, u);
    check_agrees(make(Format::BoostedSecondPrice, K), sh, u);
    check_agrees(make(Format::LazySecondPrice, K, e), affine(0.7, 0.1), e);
  }
  check_agrees(make(Format::Myerson, 3), myerson_uniform_closed_form(3, std::nullopt, u), u);
  check_agrees(make(Format::LazySecondPrice, 2), thresholded_extension(truthful(), u, 0.5), u);
}

TEST_CASE("simulation is reproducible and thread-count independent")
{
  auto const u    = ValueDistribution::uniform();
  auto const spec = make(Format::EagerSecondPrice, 3);
  setenv("BIDSHADE_THREADS", "1", 1);
  auto const a = mc_utility(spec, affine(0.9, 0.0), u, 50001, 11);
  setenv("BIDSHADE_THREADS", "4", 1);
  auto const b = mc_utility(spec, affine(0.9, 0.0), u, 50001, 11);
  unsetenv("BIDSHADE_THREADS");
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(a.n == 50001);
  auto const c = mc_utility(spec, affine(0.9, 0.0), u, 50001, 12);
  CHECK(c.mean != a.mean);
}

TEST_CASE("payment identity")
{
  auto const u    = ValueDistribution::uniform();
  auto const spec = make(Format::LazySecondPrice, 2);
  auto const chk  = myerson_lemma_check(spec, truthful(), u, 400000, 3);
  CHECK(chk.integrated == doctest::Approx(5.0 / 24.0).epsilon(1e-8));
  CHECK(std::abs(chk.direct.mean - chk.integrated) < 4.0 * chk.direct.std_error);
}

TEST_CASE("baselines and uplift")
{
  auto const u = ValueDistribution::uniform();
  auto const b = baselines(make(Format::Myerson, 2), u, 400000, 5);
  CHECK(std::abs(b.revenue_max_truthful.mean - 1.0 / 12.0) < 4.0 * b.revenue_max_truthful.std_error);
  CHECK(std::abs(b.welfare_truthful.mean - 1.0 / 6.0) < 4.0 * b.welfare_truthful.std_error);
  UtilityEstimate base{0.1, 0.0, 1, 0}, strat{0.125, 0.0, 1, 0};
  CHECK(uplift(strat, base) == doctest::Approx(25.0));
  CHECK_THROWS_AS(uplift(strat, UtilityEstimate{}), DomainError);
}

TEST_CASE("non-monotone strategies are rejected")
{
  auto const u = ValueDistribution::uniform();
  CHECK_THROWS_AS(mc_utility(make(Format::LazySecondPrice, 2), affine(-1.0, 1.0), u, 100, 1), MonotonicityError);
}

TEST_CASE("results csv")
{
  ExperimentResult r;
  r.rows.push_back({"lazy", 2, "uniform", "truthful", {0.25, 0.001, 100, 9}, 0.0});
  std::ostringstream os;
  write_results_csv(os, r, "test");
  std::string line;
  std::istringstream is(os.str());
  std::getline(is, line);
  CHECK(line == "# test");
  std::getline(is, line);
  CHECK(line == "auction,K,prior,strategy,utility_mean,utility_stderr,uplift_pct,n,seed");
  std::getline(is, line);
  CHECK(line == "lazy,2,uniform,truthful,0.25,0.001,0,100,9");
}
