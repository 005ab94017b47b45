#include "doctest.h"

#include "bidshade/errors.hpp"
#include "bidshade/serialize.hpp"

using namespace bidshade;

namespace {

void check_same_bids(ShadingStrategy const &a, ShadingStrategy const &b)
{
  for (double x : {0.0, 0.07, 0.25, 0.5, 0.61, 0.9, 1.0})
  {
    CHECK(bid(a, x) == bid(b, x));
  }
}

ShadingStrategy roundtrip(ShadingStrategy const &s)
{
  return strategy_from_json(Json::parse(to_json(s).dump()));
}

}  // namespace

TEST_CASE("distributions round-trip")
{
  for (auto const &d : {ValueDistribution::uniform(), ValueDistribution::uniform(0.2, 3.0),
                        ValueDistribution::exponential(2.5), ValueDistribution::generalized_pareto(0.1, 0.7, 0.3)})
  {
    CHECK(distribution_from_json(Json::parse(to_json(d).dump())) == d);
  }
  CHECK(distribution_from_json(Json{{"kind", "exponential"}}) == ValueDistribution::exponential());
  CHECK_THROWS_AS(distribution_from_json(Json{{"kind", "lognormal"}}), DomainError);
}

TEST_CASE("strategies round-trip exactly")
{
  auto const u = ValueDistribution::uniform();
  check_same_bids(roundtrip(truthful()), truthful());
  check_same_bids(roundtrip(affine(0.7, 0.05)), affine(0.7, 0.05));
  auto const sp = spline({0.25, 0.5, 0.75}, {0.0, 0.8, 0.1, -0.2, 0.3});
  check_same_bids(roundtrip(sp), sp);
  auto const net = mlp(mlp_init(8, 4, u));
  check_same_bids(roundtrip(net), net);
  auto const tab = tabulated({0.0, 0.5, 1.0}, {0.1, 0.3, 0.9}, {0.4, 0.4, 1.2});
  check_same_bids(roundtrip(tab), tab);

  auto const th = thresholded_extension(truthful(), u, 0.5);
  auto const th2 = roundtrip(th);
  CHECK(th2.family_name() == "thresholded_extension");
  check_same_bids(th2, th);

  auto const clipped = clip_virtualized_bid(sp, u);
  auto const back    = roundtrip(clipped);
  CHECK(back.family_name() == clipped.family_name());
  check_same_bids(back, clipped);

  auto const h  = SlackFunction::sample([](double x) { return 0.2 * x * (0.5 - x); }, 0.0, 0.5, 65);
  auto const se = feasible_family_uniformG(u, 0.5, h);
  check_same_bids(roundtrip(se), se);

  auto const j = to_json(sp);
  CHECK(j.at("family") == "spline");
  CHECK(j.at("params").at("knots").size() == 3);
  CHECK_THROWS_AS(strategy_from_json(Json{{"family", "quantum"}}), DomainError);
  CHECK_THROWS_AS(strategy_from_json(Json{{"family", "affine"}, {"params", {{"slope", 1.0}}}}), DomainError);
}

TEST_CASE("auction specs and optimizer configs")
{
  AuctionSpec spec;
  spec.format                     = Format::Myerson;
  spec.K                          = 3;
  spec.opponent                   = ValueDistribution::exponential();
  spec.strategic_reserve_override = 0.0;
  auto const back                 = auction_spec_from_json(Json::parse(to_json(spec).dump()));
  CHECK(back.format == Format::Myerson);
  CHECK(back.K == 3);
  CHECK(back.opponent == spec.opponent);
  CHECK(back.strategic_reserve_override == 0.0);
  CHECK_FALSE(back.opponent_reserve.has_value());

  auto const partial = auction_spec_from_json(Json{{"K", 4}});
  CHECK(partial.K == 4);
  CHECK(partial.format == Format::LazySecondPrice);
  CHECK_THROWS(auction_spec_from_json(Json{{"K", 0}}));

  OptimConfig c;
  c.steps = 7;
  c.rule  = StepRule::Adam;
  auto const c2 = optim_config_from_json(Json::parse(to_json(c).dump()));
  CHECK(c2.steps == 7);
  CHECK(c2.rule == StepRule::Adam);
  CHECK(optim_config_from_json(Json{{"learning_rate", 0.1}}).learning_rate == 0.1);
  CHECK_THROWS(optim_config_from_json(Json{{"family", "forest"}}));
}

TEST_CASE("reports carry their fields")
{
  CertificateReport rep{"kkt_multiplier", true, {0.0, 0.1}, {1e-8}, ""};
  auto const        j = to_json(rep);
  CHECK(j.at("name") == "kkt_multiplier");
  CHECK(j.at("pass") == true);
  CHECK(j.at("margins").size() == 2);
  CHECK(j.at("residuals").at(0) == 1e-8);

  OptimReport r;
  r.objective = {0.1, 0.2};
  r.strategy  = affine(0.5, 0.0);
  auto const jr = to_json(r);
  CHECK(jr.at("objective").size() == 2);
  CHECK(jr.at("strategy").at("family") == "affine");
  CHECK(jr.at("config").at("family") == "mlp");
}
