#include "bidshade/optimize.hpp"

#include "bidshade/errors.hpp"
#include "bidshade/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace bidshade {

namespace {

double sigmoid(double z)
{
  if (z >= 0.0)
  {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double const e = std::exp(z);
  return e / (1.0 + e);
}

// Adds cb * d(beta)/d(theta) + cbp * d(beta')/d(theta) at x into grad.
void add_parameter_gradient(ShadingStrategy const &s, double x, double cb, double cbp, std::vector<double> &grad)
{
  if (auto const *a = s.as<family::Affine>())
  {
    (void)a;
    grad[0] += cb * x + cbp;
    grad[1] += cb;
  }
  else if (auto const *sp = s.as<family::Spline>())
  {
    grad[0] += cb;
    grad[1] += cb * x + cbp;
    for (std::size_t k = 0; k < sp->knots.size(); ++k)
    {
      if (x >= sp->knots[k])
      {
        grad[k + 2] += cb * (x - sp->knots[k]) + cbp;
      }
    }
  }
  else if (auto const *m = s.as<family::Mlp>())
  {
    std::size_t const w = m->width();
    for (std::size_t j = 0; j < w; ++j)
    {
      double const pre = m->w_in[j] * x + m->b_in[j];
      if (pre > 0.0)
      {
        grad[j] += m->w_out[j] * (cb * x + cbp);
        grad[w + j] += m->w_out[j] * cb;
        grad[2 * w + j] += cb * pre + cbp * m->w_in[j];
      }
    }
    grad[3 * w] += cb;
  }
  else
  {
    throw DomainError("strategy family has no trainable parameters: " + s.family_name());
  }
}

// beta and beta' in one pass for networks.
std::pair<double, double> bid_and_slope(ShadingStrategy const &s, double x)
{
  if (auto const *m = s.as<family::Mlp>())
  {
    double b = m->b_out, bp = 0.0;
    for (std::size_t j = 0; j < m->width(); ++j)
    {
      double const pre = m->w_in[j] * x + m->b_in[j];
      if (pre > 0.0)
      {
        b += m->w_out[j] * pre;
        bp += m->w_out[j] * m->w_in[j];
      }
    }
    return {b, bp};
  }
  return {bid(s, x), bid_derivative(s, x)};
}

bool spline_feasible(family::Spline const &sp, double lo, double tol = 1e-12)
{
  if (sp.coeffs[0] + sp.coeffs[1] * lo < -tol)
  {
    return false;
  }
  double slope = 0.0;
  for (std::size_t k = 1; k < sp.coeffs.size(); ++k)
  {
    slope += sp.coeffs[k];
    if (slope < -tol)
    {
      return false;
    }
  }
  return true;
}

void finish(OptimReport &rep, AuctionSpec const &spec, ValueDistribution const &d)
{
  auto const &s              = rep.strategy;
  rep.monotonicity_violation = find_decrease(s, d).has_value();
  rep.final_utility          = utility(spec, s, d, UtilityMode::exact(), false);
  rep.final_reserve_value    = strategic_reserve_value(spec, s, d);
  rep.final_reserve_price    = bid(s, rep.final_reserve_value);
  if (rep.monotonicity_violation)
  {
    rep.warnings.push_back("final strategy is not monotone");
  }
}

void record_reserve(OptimReport &rep, double xr, std::size_t step)
{
  if (!rep.reserve_trace.empty() && std::abs(xr - rep.reserve_trace.back()) > kReserveJump)
  {
    rep.instability_steps.push_back(step);
  }
  rep.reserve_trace.push_back(xr);
}

}  // namespace

void OptimConfig::validate() const
{
  if (batch_size < 1)
  {
    throw DomainError("batch size must be at least 1");
  }
  if (!(learning_rate > 0.0))
  {
    throw DomainError("learning rate must be positive");
  }
  if (!(eta > 0.0))
  {
    throw DomainError("eta must be positive");
  }
  if (!(decay > 0.0) || decay_every < 1)
  {
    throw DomainError("invalid learning rate schedule");
  }
  if (family != "mlp" && family != "affine" && family != "spline")
  {
    throw DomainError("unknown trainable family: " + family);
  }
  if (checkpoint_every < 1 || refit_every < 1)
  {
    throw DomainError("checkpoint and refit intervals must be at least 1");
  }
  if (family == "mlp" && width < 1)
  {
    throw DomainError("network width must be at least 1");
  }
}

std::string step_rule_name(StepRule r)
{
  return r == StepRule::Adam ? "adam" : "sgd";
}

StepRule parse_step_rule(std::string const &name)
{
  if (name == "adam")
  {
    return StepRule::Adam;
  }
  if (name == "sgd")
  {
    return StepRule::Sgd;
  }
  throw DomainError("unknown step rule: " + name);
}

std::vector<double> strategy_parameters(ShadingStrategy const &s)
{
  if (auto const *a = s.as<family::Affine>())
  {
    return {a->slope, a->intercept};
  }
  if (auto const *sp = s.as<family::Spline>())
  {
    return sp->coeffs;
  }
  if (auto const *m = s.as<family::Mlp>())
  {
    std::vector<double> out;
    out.reserve(3 * m->width() + 1);
    out.insert(out.end(), m->w_in.begin(), m->w_in.end());
    out.insert(out.end(), m->b_in.begin(), m->b_in.end());
    out.insert(out.end(), m->w_out.begin(), m->w_out.end());
    out.push_back(m->b_out);
    return out;
  }
  throw DomainError("strategy family has no trainable parameters: " + s.family_name());
}

ShadingStrategy with_parameters(ShadingStrategy const &like, std::vector<double> const &theta)
{
  if (like.as<family::Affine>())
  {
    if (theta.size() != 2)
    {
      throw DomainError("affine strategies take 2 parameters");
    }
    return affine(theta[0], theta[1]);
  }
  if (auto const *sp = like.as<family::Spline>())
  {
    return spline(sp->knots, theta);
  }
  if (auto const *m = like.as<family::Mlp>())
  {
    std::size_t const w = m->width();
    if (theta.size() != 3 * w + 1)
    {
      throw DomainError("network parameter vector has the wrong length");
    }
    family::Mlp net;
    net.w_in.assign(theta.begin(), theta.begin() + w);
    net.b_in.assign(theta.begin() + w, theta.begin() + 2 * w);
    net.w_out.assign(theta.begin() + 2 * w, theta.begin() + 3 * w);
    net.b_out = theta[3 * w];
    return mlp(std::move(net));
  }
  throw DomainError("strategy family has no trainable parameters: " + like.family_name());
}

BatchObjective smoothed_batch_objective(AuctionSpec const &spec, ValueDistribution const &d,
                                        ShadingStrategy const &s, std::vector<double> const &xs, double eta,
                                        std::optional<std::pair<double, double>> bsp_line)
{
  spec.validate();
  if (xs.empty())
  {
    throw DomainError("empty batch");
  }
  bool const bsp = spec.format == Format::BoostedSecondPrice;
  double     a = 0.0, c = 0.0;
  if (bsp)
  {
    if (!bsp_line)
    {
      auto const fit = bsp_fit(BidDistribution(d, s, 512, DensityMode::Analytic), spec.bsp_variant);
      bsp_line       = std::make_pair(fit.slope, fit.intercept);
    }
    a = bsp_line->first;
    c = bsp_line->second;
  }
  bool const           gate_on_line = bsp && spec.bsp_variant == 1;
  CompetitionCdf const G(spec);
  FzDistribution const Z(spec);

  std::vector<double> grad(strategy_parameters(s).size(), 0.0);
  double              sum = 0.0, sumsq = 0.0;
  for (double x : xs)
  {
    auto const [b, bp] = bid_and_slope(s, x);
    double const m     = d.mills_ratio(x);
    double const h     = b - bp * m;
    double const line  = a * b + c;
    double const gate  = gate_on_line ? line : h;
    double const w     = sigmoid(eta * gate);
    double const dw    = eta * w * (1.0 - w);

    double A = 0.0, dA_db = 0.0, dA_dh = 0.0;
    switch (spec.format)
    {
    case Format::LazySecondPrice:
    case Format::EagerSecondPrice:
      A     = G.cdf(b);
      dA_db = G.pdf(b);
      break;
    case Format::Myerson:
      if (h >= -kVirtualTol)
      {
        A     = Z.cdf(std::max(h, 0.0));
        dA_dh = h > 0.0 ? Z.pdf(h) : 0.0;
      }
      break;
    case Format::BoostedSecondPrice:
      A     = Z.cdf(std::max(line, 0.0));
      dA_db = line > 0.0 ? Z.pdf(line) * a : 0.0;
      break;
    }
    double const surplus = x - h;
    double const J       = surplus * A * w;
    sum += J;
    sumsq += J * J;
    double const dJ_db = surplus * (dA_db * w + (gate_on_line ? A * dw * a : 0.0));
    double const dJ_dh = -A * w + surplus * (dA_dh * w + (gate_on_line ? 0.0 : A * dw));
    add_parameter_gradient(s, x, dJ_db + dJ_dh, -m * dJ_dh, grad);
  }
  double const n    = static_cast<double>(xs.size());
  double const mean = sum / n;
  for (double &g : grad)
  {
    g /= n;
  }
  double const var = xs.size() > 1 ? std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n), std::move(grad)};
}

OptimReport sgd_optimize(AuctionSpec const &spec, ValueDistribution const &d, OptimConfig const &config)
{
  config.validate();
  spec.validate();
  OptimReport rep;
  rep.config = config;
  if (config.family == "mlp")
  {
    rep.strategy = mlp(mlp_init(config.width, config.seed, d));
  }
  else if (config.family == "affine")
  {
    rep.strategy = affine(1.0, 0.0);
  }
  else
  {
    throw DomainError("sgd_optimize trains mlp or affine strategies");
  }

  std::vector<double> theta = strategy_parameters(rep.strategy);
  ShadingStrategy     best  = rep.strategy;
  double              best_u = -std::numeric_limits<double>::infinity();
  auto const          checkpoint = [&](std::size_t step) {
    double u;
    try
    {
      u = utility(spec, rep.strategy, d, UtilityMode::relaxed(), false);
    }
    catch (std::exception const &)
    {
      return;
    }
    if (u > best_u)
    {
      best_u        = u;
      best          = rep.strategy;
      rep.best_step = step;
    }
  };
  checkpoint(0);
  std::vector<double> m1(theta.size(), 0.0), m2(theta.size(), 0.0);
  std::mt19937_64     gen(config.seed);
  std::vector<double> xs(config.batch_size);
  std::optional<std::pair<double, double>> line;
  double const b1 = 0.9, b2 = 0.999, eps = 1e-8;

  for (std::size_t step = 0; step < config.steps; ++step)
  {
    double const lr = config.learning_rate
                      * std::pow(config.decay, static_cast<double>(step / config.decay_every));
    for (double &x : xs)
    {
      x = d.quantile(unit_uniform(gen()));
    }
    if (spec.format == Format::BoostedSecondPrice && (!line || step % config.refit_every == 0))
    {
      try
      {
        auto const fit = bsp_fit(BidDistribution(d, rep.strategy, 512, DensityMode::Analytic), spec.bsp_variant);
        line           = std::make_pair(fit.slope, fit.intercept);
      }
      catch (std::exception const &e)
      {
        if (!line)
        {
          throw OptimizerError(std::string("cannot fit the boosted line: ") + e.what(), step);
        }
        rep.warnings.push_back("kept previous boosted line at step " + std::to_string(step));
      }
    }
    BatchObjective const obj = smoothed_batch_objective(spec, d, rep.strategy, xs, config.eta, line);
    bool finite = std::isfinite(obj.value);
    for (double g : obj.gradient)
    {
      finite = finite && std::isfinite(g);
    }
    if (!finite)
    {
      throw OptimizerError("objective diverged", step);
    }
    rep.objective.push_back(obj.value);
    rep.objective_stderr.push_back(obj.std_error);

    double const t = static_cast<double>(step + 1);
    for (std::size_t i = 0; i < theta.size(); ++i)
    {
      double const g = obj.gradient[i];
      if (config.rule == StepRule::Adam)
      {
        m1[i] = b1 * m1[i] + (1.0 - b1) * g;
        m2[i] = b2 * m2[i] + (1.0 - b2) * g * g;
        double const mh = m1[i] / (1.0 - std::pow(b1, t));
        double const vh = m2[i] / (1.0 - std::pow(b2, t));
        theta[i] += lr * mh / (std::sqrt(vh) + eps);
      }
      else
      {
        theta[i] += lr * g;
      }
    }
    rep.strategy = with_parameters(rep.strategy, theta);
    record_reserve(rep, reserve_value(rep.strategy, d, 1024), step);
    if ((step + 1) % config.checkpoint_every == 0 || step + 1 == config.steps)
    {
      checkpoint(step + 1);
    }
  }
  rep.best_relaxed = best_u;
  rep.strategy     = config.clip_final && config.steps > 0 ? clip_virtualized_bid(best, d) : best;
  finish(rep, spec, d);
  return rep;
}

ShadingStrategy truthful_spline(ValueDistribution const &d, std::size_t knots)
{
  Support const       sup = d.truncated_support();
  std::vector<double> k(knots);
  for (std::size_t i = 0; i < knots; ++i)
  {
    k[i] = sup.lo + (sup.hi - sup.lo) * static_cast<double>(i + 1) / static_cast<double>(knots + 1);
  }
  std::vector<double> c(knots + 2, 0.0);
  c[1] = 1.0;
  return spline(std::move(k), std::move(c));
}

namespace {

std::vector<double> spline_gradient_at(AuctionSpec const &spec, ValueDistribution const &d,
                                       family::Spline const &sp)
{
  ShadingStrategy const s = spline(sp.knots, sp.coeffs);
  std::vector<double>   V(sp.coeffs.size());
  for (std::size_t i = 0; i < V.size(); ++i)
  {
    std::vector<double> e(sp.coeffs.size(), 0.0);
    e[i] = 1.0;
    V[i] = directional_derivative(spec, s, d, spline(sp.knots, e));
  }
  return V;
}

std::vector<double> spline_gradient_checked(AuctionSpec const &spec, ValueDistribution const &d,
                                            ShadingStrategy const &s, std::vector<std::string> *warnings)
{
  auto const *sp = s.as<family::Spline>();
  if (!sp)
  {
    throw DomainError("spline gradient needs a spline strategy");
  }
  double const  xr    = strategic_reserve_value(spec, s, d);
  Support const sup   = d.truncated_support();
  double const  scale = std::isfinite(sup.hi) ? sup.hi - sup.lo : 1.0;
  auto          near  = std::min_element(sp->knots.begin(), sp->knots.end(), [&](double a, double b) {
    return std::abs(a - xr) < std::abs(b - xr);
  });
  bool degenerate = near != sp->knots.end() && std::abs(*near - xr) <= 1e-12 * scale;
  if (!degenerate)
  {
    try
    {
      return spline_gradient_at(spec, d, *sp);
    }
    catch (SingularityError const &)
    {
      degenerate = true;
    }
  }
  if (warnings)
  {
    warnings->push_back("reserve value at a knot; gradient recomputed with the knot perturbed by 1e-9");
  }
  family::Spline moved = *sp;
  if (near != sp->knots.end())
  {
    moved.knots[static_cast<std::size_t>(near - sp->knots.begin())] += 1e-9;
  }
  return spline_gradient_at(spec, d, moved);
}

}  // namespace

std::vector<double> spline_gradient(AuctionSpec const &spec, ValueDistribution const &d, ShadingStrategy const &s)
{
  return spline_gradient_checked(spec, d, s, nullptr);
}

OptimReport spline_steepest_descent(AuctionSpec const &spec, ValueDistribution const &d,
                                    ShadingStrategy const &init, OptimConfig const &config)
{
  config.validate();
  spec.validate();
  auto const *sp0 = init.as<family::Spline>();
  if (!sp0)
  {
    throw DomainError("spline_steepest_descent needs a spline strategy");
  }
  double const lo = d.truncated_support().lo;
  if (!spline_feasible(*sp0, lo))
  {
    throw DomainError("initial spline violates the monotonicity constraints");
  }
  OptimReport rep;
  rep.config   = config;
  rep.strategy = init;

  std::vector<double> const knots = sp0->knots;
  std::vector<double>       c     = sp0->coeffs;
  ShadingStrategy           cur   = init;
  double                    best  = utility(spec, cur, d);
  rep.reserve_trace.push_back(strategic_reserve_value(spec, cur, d));
  std::size_t const n = c.size();

  for (std::size_t step = 0; step < config.steps; ++step)
  {
    std::vector<double> V;
    try
    {
      V = spline_gradient_checked(spec, d, cur, &rep.warnings);
    }
    catch (SingularityError const &e)
    {
      throw OptimizerError(std::string("singular gradient: ") + e.what(), step);
    }

    lp::Problem p;
    p.c  = V;
    p.lo.assign(n, -config.learning_rate);
    p.hi.assign(n, config.learning_rate);
    std::vector<double> row(n, 0.0);
    row[0] = -1.0;
    row[1] = -lo;
    p.A.push_back(row);
    p.b.push_back(c[0] + c[1] * lo);
    double prefix = 0.0;
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t j = 1; j < n; ++j)
    {
      row[j] = -1.0;
      prefix += c[j];
      p.A.push_back(row);
      p.b.push_back(prefix);
    }
    lp::Solution const sol = lp::solve(p);
    if (!(sol.objective > config.step_tolerance))
    {
      break;
    }
    for (std::size_t i = 0; i < n; ++i)
    {
      c[i] += sol.x[i];
    }
    family::Spline const next{knots, c};
    if (!spline_feasible(next, lo, 1e-9))
    {
      throw OptimizerError("monotonicity constraints violated", step);
    }
    cur            = spline(knots, c);
    double const u = utility(spec, cur, d);
    if (!std::isfinite(u))
    {
      throw OptimizerError("objective diverged", step);
    }
    rep.objective.push_back(u);
    rep.objective_stderr.push_back(0.0);
    record_reserve(rep, strategic_reserve_value(spec, cur, d), step);
    if (u > best)
    {
      best          = u;
      rep.best_step = step + 1;
      rep.strategy  = cur;
    }
  }
  finish(rep, spec, d);
  return rep;
}

OptimReport optimize(AuctionSpec const &spec, ValueDistribution const &d, OptimConfig const &config)
{
  if (config.family == "spline")
  {
    return spline_steepest_descent(spec, d, truthful_spline(d, config.knots), config);
  }
  return sgd_optimize(spec, d, config);
}

std::vector<double> finite_diff_gradient(std::function<double(std::vector<double> const &)> const &objective,
                                         std::vector<double> const &params, double h)
{
  if (!(h > 0.0))
  {
    throw DomainError("finite difference step must be positive");
  }
  std::vector<double> g(params.size());
  std::vector<double> p = params;
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    p[i]           = params[i] + h;
    double const f1 = objective(p);
    p[i]           = params[i] - h;
    double const f0 = objective(p);
    p[i]           = params[i];
    g[i]           = (f1 - f0) / (2.0 * h);
  }
  return g;
}

void write_trace_csv(std::ostream &os, OptimReport const &report)
{
  os << "step,objective,reserve_value\n";
  auto const old = os.precision(12);
  std::size_t const offset = report.reserve_trace.size() > report.objective.size() ? 1 : 0;
  for (std::size_t i = 0; i < report.objective.size(); ++i)
  {
    os << i << ',' << report.objective[i] << ',' << report.reserve_trace[i + offset] << '\n';
  }
  os.precision(old);
}

}  // namespace bidshade
