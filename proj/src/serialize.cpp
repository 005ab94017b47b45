#include "bidshade/serialize.hpp"

#include "bidshade/errors.hpp"

#include <memory>

namespace bidshade {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ShadingStrategy wrap_family(ShadingStrategy::Repr::Variant v)
{
  return ShadingStrategy(std::make_shared<ShadingStrategy::Repr const>(ShadingStrategy::Repr{std::move(v)}));
}

template <typename T>
T get(Json const &j, char const *key)
{
  if (!j.contains(key))
  {
    throw DomainError(std::string("missing key '") + key + "'");
  }
  return j.at(key).get<T>();
}

Json optional_json(std::optional<double> const &v)
{
  return v ? Json(*v) : Json(nullptr);
}

std::optional<double> optional_from(Json const &j)
{
  if (j.is_null())
  {
    return std::nullopt;
  }
  return j.get<double>();
}

}  // namespace

Json to_json(ValueDistribution const &d)
{
  char const *kind = "gpd";
  switch (d.kind())
  {
  case ValueDistribution::Kind::Uniform:
    kind = "uniform";
    break;
  case ValueDistribution::Kind::Exponential:
    kind = "exponential";
    break;
  case ValueDistribution::Kind::GeneralizedPareto:
    break;
  }
  return {{"kind", kind}, {"params", d.params()}};
}

ValueDistribution distribution_from_json(Json const &j)
{
  auto const kind = get<std::string>(j, "kind");
  auto const p    = j.value("params", std::vector<double>{});
  if (kind == "uniform")
  {
    return p.empty() ? ValueDistribution::uniform() : ValueDistribution::uniform(p.at(0), p.at(1));
  }
  if (kind == "exponential")
  {
    return p.empty() ? ValueDistribution::exponential() : ValueDistribution::exponential(p.at(0));
  }
  if (kind == "gpd")
  {
    if (p.size() != 3)
    {
      throw DomainError("gpd prior needs params [mu, sigma, xi]");
    }
    return ValueDistribution::generalized_pareto(p[0], p[1], p[2]);
  }
  throw DomainError("unknown prior kind '" + kind + "'");
}

Json to_json(ShadingStrategy const &s)
{
  Json params = std::visit(
    overloaded{
      [](family::Truthful const &) { return Json::object(); },
      [](family::Affine const &f) { return Json{{"slope", f.slope}, {"intercept", f.intercept}}; },
      [](family::Thresholded const &f) {
        return Json{{"base", to_json(f.base)}, {"prior", to_json(f.prior)}, {"r", f.r}, {"level", f.level}};
      },
      [](family::Spline const &f) { return Json{{"knots", f.knots}, {"coeffs", f.coeffs}}; },
      [](family::Mlp const &f) {
        return Json{{"w_in", f.w_in}, {"b_in", f.b_in}, {"w_out", f.w_out}, {"b_out", f.b_out}};
      },
      [](family::Tabulated const &f) { return Json{{"x", f.x}, {"bid", f.bid}, {"slope", f.slope}}; },
      [](family::Patched const &f) {
        Json segs = Json::array();
        for (auto const &g : f.segments)
        {
          segs.push_back({{"lo", g.lo}, {"hi", g.hi}, {"replace", g.replace}, {"level", g.level}});
        }
        return Json{{"base", to_json(f.base)}, {"prior", to_json(f.prior)}, {"segments", segs}};
      },
      [](family::SlackExtension const &f) {
        return Json{{"prior", to_json(f.prior)}, {"r", f.r},         {"bid_at_r", f.bid_at_r},
                    {"x", f.x},                  {"slack", f.slack}, {"tail", f.tail}};
      }},
    s.repr().v);
  return {{"family", s.family_name()}, {"params", params}};
}

ShadingStrategy strategy_from_json(Json const &j)
{
  auto const family = get<std::string>(j, "family");
  Json const p      = j.value("params", Json::object());
  using V           = std::vector<double>;
  if (family == "truthful")
  {
    return truthful();
  }
  if (family == "affine")
  {
    return affine(get<double>(p, "slope"), get<double>(p, "intercept"));
  }
  if (family == "thresholded_extension")
  {
    return wrap_family(family::Thresholded{strategy_from_json(get<Json>(p, "base")),
                                           distribution_from_json(get<Json>(p, "prior")), get<double>(p, "r"),
                                           get<double>(p, "level")});
  }
  if (family == "spline")
  {
    return spline(get<V>(p, "knots"), get<V>(p, "coeffs"));
  }
  if (family == "mlp")
  {
    family::Mlp net;
    net.w_in  = get<V>(p, "w_in");
    net.b_in  = get<V>(p, "b_in");
    net.w_out = get<V>(p, "w_out");
    net.b_out = get<double>(p, "b_out");
    return mlp(std::move(net));
  }
  if (family == "tabulated")
  {
    return tabulated(get<V>(p, "x"), get<V>(p, "bid"), get<V>(p, "slope"));
  }
  if (family == "patched")
  {
    std::vector<family::PatchSegment> segs;
    for (auto const &g : get<Json>(p, "segments"))
    {
      segs.push_back({get<double>(g, "lo"), get<double>(g, "hi"), get<bool>(g, "replace"), get<double>(g, "level")});
    }
    return patched(strategy_from_json(get<Json>(p, "base")), distribution_from_json(get<Json>(p, "prior")),
                   std::move(segs));
  }
  if (family == "slack_extension")
  {
    return make_strategy(family::SlackExtension{distribution_from_json(get<Json>(p, "prior")), get<double>(p, "r"),
                                                get<double>(p, "bid_at_r"), get<V>(p, "x"), get<V>(p, "slack"),
                                                get<V>(p, "tail")});
  }
  throw DomainError("unknown strategy family '" + family + "'");
}

Json to_json(AuctionSpec const &spec)
{
  return {{"auction", format_name(spec.format)},
          {"K", spec.K},
          {"opponent", to_json(spec.opponent)},
          {"opponent_reserve", optional_json(spec.opponent_reserve)},
          {"bsp_variant", spec.bsp_variant},
          {"strategic_reserve_override", optional_json(spec.strategic_reserve_override)}};
}

AuctionSpec auction_spec_from_json(Json const &j, AuctionSpec base)
{
  if (j.contains("auction"))
  {
    base.format = parse_format(j.at("auction").get<std::string>());
  }
  if (j.contains("K"))
  {
    base.K = j.at("K").get<int>();
  }
  if (j.contains("opponent"))
  {
    base.opponent = distribution_from_json(j.at("opponent"));
  }
  if (j.contains("opponent_reserve"))
  {
    base.opponent_reserve = optional_from(j.at("opponent_reserve"));
  }
  if (j.contains("bsp_variant"))
  {
    base.bsp_variant = j.at("bsp_variant").get<int>();
  }
  if (j.contains("strategic_reserve_override"))
  {
    base.strategic_reserve_override = optional_from(j.at("strategic_reserve_override"));
  }
  base.validate();
  return base;
}

Json to_json(OptimConfig const &c)
{
  return {{"batch_size", c.batch_size},
          {"steps", c.steps},
          {"learning_rate", c.learning_rate},
          {"decay", c.decay},
          {"decay_every", c.decay_every},
          {"eta", c.eta},
          {"seed", c.seed},
          {"family", c.family},
          {"width", c.width},
          {"knots", c.knots},
          {"rule", step_rule_name(c.rule)},
          {"step_tolerance", c.step_tolerance},
          {"refit_every", c.refit_every},
          {"checkpoint_every", c.checkpoint_every},
          {"clip_final", c.clip_final}};
}

OptimConfig optim_config_from_json(Json const &j, OptimConfig base)
{
  auto const take = [&](char const *key, auto &field) {
    if (j.contains(key))
    {
      field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    }
  };
  take("batch_size", base.batch_size);
  take("steps", base.steps);
  take("learning_rate", base.learning_rate);
  take("decay", base.decay);
  take("decay_every", base.decay_every);
  take("eta", base.eta);
  take("seed", base.seed);
  take("family", base.family);
  take("width", base.width);
  take("knots", base.knots);
  take("step_tolerance", base.step_tolerance);
  take("refit_every", base.refit_every);
  take("checkpoint_every", base.checkpoint_every);
  take("clip_final", base.clip_final);
  if (j.contains("rule"))
  {
    base.rule = parse_step_rule(j.at("rule").get<std::string>());
  }
  base.validate();
  return base;
}

Json to_json(OptimReport const &r)
{
  return {{"config", to_json(r.config)},
          {"objective", r.objective},
          {"objective_stderr", r.objective_stderr},
          {"reserve_trace", r.reserve_trace},
          {"instability_steps", r.instability_steps},
          {"warnings", r.warnings},
          {"strategy", to_json(r.strategy)},
          {"final_utility", r.final_utility},
          {"final_reserve_value", r.final_reserve_value},
          {"final_reserve_price", r.final_reserve_price},
          {"monotonicity_violation", r.monotonicity_violation},
          {"best_step", r.best_step},
          {"best_relaxed", r.best_relaxed}};
}

Json to_json(UtilityEstimate const &e)
{
  return {{"mean", e.mean}, {"std_error", e.std_error}, {"n", e.n}, {"seed", e.seed}};
}

Json to_json(CertificateReport const &r)
{
  return {{"name", r.name}, {"pass", r.pass}, {"margins", r.margins}, {"residuals", r.residuals}, {"detail", r.detail}};
}

}  // namespace bidshade
