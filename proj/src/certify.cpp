#include "bidshade/certify.hpp"

#include "bidshade/bidspace.hpp"
#include "bidshade/errors.hpp"
#include "bidshade/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace bidshade {

namespace {

constexpr double kSlackTol    = 1e-12;
constexpr double kEndpointTol = 1e-9;

// Gauss-Legendre integral of fn over [a, b].
template <typename Fn>
double gauss(Fn const &fn, double a, double b)
{
  if (b <= a)
  {
    return 0.0;
  }
  auto const &gl  = quad::gauss_legendre(8);
  double      sum = 0.0;
  for (std::size_t k = 0; k < gl.nodes.size(); ++k)
  {
    sum += gl.weights[k] * fn(a + 0.5 * (b - a) * (gl.nodes[k] + 1.0));
  }
  return 0.5 * (b - a) * sum;
}

std::size_t cell_of(std::vector<double> const &x, double t)
{
  auto j = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin());
  j      = std::clamp<std::size_t>(j, 1, x.size() - 1);
  return j - 1;
}

// int_t^r fn on the slack grid: tails at the nodes plus a partial cell.
template <typename Fn>
class TailIntegral
{
public:
  TailIntegral(std::vector<double> const &x, Fn fn)
    : x_(x)
    , fn_(std::move(fn))
    , tail_(x.size(), 0.0)
  {
    for (std::size_t i = x.size() - 1; i-- > 0;)
    {
      tail_[i] = tail_[i + 1] + gauss(fn_, x[i], x[i + 1]);
    }
  }

  double at(double t) const
  {
    std::size_t const i = cell_of(x_, t);
    return tail_[i + 1] + gauss(fn_, t, x_[i + 1]);
  }

  std::vector<double> const &nodes() const { return tail_; }

private:
  std::vector<double> const &x_;
  Fn                         fn_;
  std::vector<double>        tail_;
};

// Cell-by-cell integral of fn over the grid.
template <typename Fn>
double grid_integral(std::vector<double> const &x, Fn const &fn)
{
  std::vector<double> parts(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
  {
    parts[i] = gauss(fn, x[i], x[i + 1]);
  }
  return quad::pairwise_sum(parts);
}

void require_nonpositive_virtual_value(ValueDistribution const &d, double lo, double r, bool closed)
{
  int const n = 1024;
  for (int i = 0; i <= n; ++i)
  {
    double const x = lo + (r - lo) * i / n;
    if (!closed && i == n)
    {
      break;
    }
    if (virtual_value(d, x) > kSlackTol)
    {
      throw DomainError("virtual value of the prior is positive at " + std::to_string(x) + " below r");
    }
  }
}

void require_slack_domain(ValueDistribution const &d, double r, SlackFunction const &h)
{
  if (std::abs(h.lo() - d.support().lo) > kSlackTol || std::abs(h.r() - r) > kSlackTol)
  {
    throw DomainError("slack must live on [support minimum, r]");
  }
}

}  // namespace

SlackFunction::SlackFunction(std::vector<double> x, std::vector<double> h)
  : x_(std::move(x))
  , h_(std::move(h))
{
  if (x_.size() < 2 || h_.size() != x_.size())
  {
    throw DomainError("slack grid is malformed");
  }
  for (std::size_t i = 1; i < x_.size(); ++i)
  {
    if (!(x_[i] > x_[i - 1]))
    {
      throw DomainError("slack grid must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i < h_.size(); ++i)
  {
    if (!(h_[i] >= -kSlackTol))
    {
      throw InfeasibleSlackError("slack is negative at " + std::to_string(x_[i]));
    }
  }
  if (std::abs(h_.front()) > kEndpointTol || std::abs(h_.back()) > kEndpointTol)
  {
    throw InfeasibleSlackError("slack must vanish at both ends");
  }
}

SlackFunction SlackFunction::sample(std::function<double(double)> const &fn, double lo, double r, int n)
{
  if (n < 2 || !(r > lo))
  {
    throw DomainError("slack sampling needs lo < r and two points");
  }
  std::vector<double> x(n), h(n);
  for (int i = 0; i < n; ++i)
  {
    x[i] = i == n - 1 ? r : lo + (r - lo) * i / (n - 1);
    h[i] = fn(x[i]);
  }
  return SlackFunction(std::move(x), std::move(h));
}

SlackFunction SlackFunction::zero(double lo, double r, int n)
{
  return sample([](double) { return 0.0; }, lo, r, n);
}

double SlackFunction::operator()(double t) const
{
  std::size_t const i = cell_of(x_, t);
  double const      w = (t - x_[i]) / (x_[i + 1] - x_[i]);
  return h_[i] + w * (h_[i + 1] - h_[i]);
}

double SlackFunction::slope(double t) const
{
  std::size_t const i = cell_of(x_, t);
  return (h_[i + 1] - h_[i]) / (x_[i + 1] - x_[i]);
}

SlackFunction SlackFunction::scaled(double c) const
{
  std::vector<double> h = h_;
  for (double &v : h)
  {
    v *= c;
  }
  return SlackFunction(x_, std::move(h));
}

ShadingStrategy feasible_family_uniformG(ValueDistribution const &d, double r, SlackFunction const &h)
{
  if (!(r < 1.0) || !(r > d.support().lo) || !(r < d.support().hi))
  {
    throw DomainError("feasible family needs r inside the support and below one");
  }
  require_slack_domain(d, r, h);

  TailIntegral const    tail(h.x(), [&](double t) { return h(t) * d.pdf(t); });
  ShadingStrategy const s = make_strategy(family::SlackExtension{d, r, r, h.x(), h.h(), tail.nodes()});

  auto const &x = h.x();
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    for (double t : {x[i], i + 1 < x.size() ? 0.5 * (x[i] + x[i + 1]) : x[i]})
    {
      if (bid(s, t) > 1.0 + kSlackTol)
      {
        throw InfeasibleSlackError("slack extension bids above one at " + std::to_string(t));
      }
    }
  }
  return s;
}

double buyer_value_uniformG(ValueDistribution const &d, double r, SlackFunction const &h)
{
  ShadingStrategy const s = feasible_family_uniformG(d, r, h);
  return grid_integral(h.x(), [&](double x) { return x * bid(s, x) * d.pdf(x); });
}

double buyer_value_first_order(ValueDistribution const &d, double r, SlackFunction const &h)
{
  require_slack_domain(d, r, h);
  TailIntegral const tail(h.x(), [&](double t) { return h(t) * d.pdf(t); });
  double const       inner = grid_integral(h.x(), [&](double x) {
    double const S = d.survival(x);
    return x * d.pdf(x) / S * (tail.at(x) - h(x) * S);
  });
  return inner / (r * d.survival(r));
}

SlackFunction random_slack(double lo, double r, std::uint64_t seed, int n)
{
  std::mt19937_64 gen(seed);
  auto const      u     = [&](double a, double b) { return a + (b - a) * unit_uniform(gen()); };
  double const    L     = r - lo;
  int const       count = 3 + static_cast<int>(gen() % 6);
  struct Hat
  {
    double c, w, a;
  };
  std::vector<Hat> hats;
  for (int k = 0; k < count; ++k)
  {
    double const c = u(lo + 0.05 * L, r - 0.05 * L);
    double const w = u(0.02 * L, std::min(c - lo, r - c));
    hats.push_back({c, w, u(0.2, 1.0)});
  }
  return SlackFunction::sample(
    [&](double t) {
      double v = 0.0;
      for (auto const &hat : hats)
      {
        v += hat.a * std::max(0.0, 1.0 - std::abs(t - hat.c) / hat.w);
      }
      return v;
    },
    lo, r, n);
}

double feasible_scale_uniformG(ValueDistribution const &d, double r, SlackFunction const &h, double cap)
{
  auto const feasible = [&](double c) {
    try
    {
      feasible_family_uniformG(d, r, h.scaled(c));
      return true;
    }
    catch (InfeasibleSlackError const &)
    {
      return false;
    }
  };
  if (feasible(cap))
  {
    return cap;
  }
  // The feasible multiples form an interval containing zero.
  double a = 0.0, b = cap;
  for (int k = 0; k < 60; ++k)
  {
    double const m = 0.5 * (a + b);
    (feasible(m) ? a : b) = m;
  }
  return a;
}

CertificateReport global_optimality_test_uniformG(ValueDistribution const &d, double r, int trials,
                                                  std::uint64_t seed)
{
  CertificateReport rep;
  rep.name      = "global_optimality_uniformG";
  double const lo = d.support().lo;
  try
  {
    if (!(r < 1.0))
    {
      throw DomainError("bid at r must stay below one");
    }
    require_nonpositive_virtual_value(d, lo, r, true);
  }
  catch (DomainError const &e)
  {
    rep.detail = std::string("precondition violated: ") + e.what();
    return rep;
  }

  SlackFunction const zero = SlackFunction::zero(lo, r);
  double const        pi0  = buyer_value_uniformG(d, r, zero);

  // beta(.; 0) against the thresholded extension.
  ShadingStrategy const s0 = feasible_family_uniformG(d, r, zero);
  ShadingStrategy const th = thresholded_extension(truthful(), d, r);
  double                collapse = 0.0;
  for (double x : zero.x())
  {
    collapse = std::max(collapse, std::abs(bid(s0, x) - bid(th, x)));
  }

  std::mt19937_64 gen(seed);
  rep.pass = true;
  for (int t = 0; t < trials; ++t)
  {
    SlackFunction const h    = random_slack(lo, r, gen());
    double const        cmax = feasible_scale_uniformG(d, r, h);
    double const        c    = cmax * (0.05 + 0.95 * unit_uniform(gen()));
    double const        gap  = pi0 - buyer_value_uniformG(d, r, h.scaled(c));
    rep.margins.push_back(gap);
    rep.pass = rep.pass && gap >= -1e-9;
  }
  rep.residuals = {collapse};
  std::ostringstream os;
  os << "Pi(0) = " << pi0 << " over " << trials << " slacks";
  rep.detail = os.str();
  return rep;
}

double local_perturbation_value(CompetitionCdf const &G, ValueDistribution const &d, double r,
                                SlackFunction const &h)
{
  double const lo = h.lo();
  if (!(r > lo) || std::abs(h.r() - r) > kSlackTol)
  {
    throw DomainError("slack must end at r");
  }
  require_nonpositive_virtual_value(d, lo, r, false);
  double const C     = r * d.survival(r);
  auto const   beta  = [&](double x) { return C / d.survival(x); };
  if (!(G.cdf(beta(lo)) > 0.0))
  {
    throw DomainError("competition never loses to the thresholded bid at the support minimum");
  }

  TailIntegral const J(h.x(), [&](double t) {
    double const S  = d.survival(t);
    double const b  = beta(t);
    double const Gb = G.cdf(b);
    return h(t) * (C * d.pdf(t) / (S * S)) * G.pdf(b) / (Gb * Gb);
  });
  return grid_integral(h.x(), [&](double x) {
    double const b        = beta(x);
    double const rho_beta = (J.at(x) - h(x) / G.cdf(b)) / d.survival(x);
    return x * d.pdf(x) * G.pdf(b) * rho_beta;
  });
}

CertificateReport local_perturbation_test(CompetitionCdf const &G, ValueDistribution const &d, double r,
                                          int trials, std::uint64_t seed)
{
  CertificateReport rep;
  rep.name = "local_perturbation";
  std::mt19937_64 gen(seed);
  double const    lo = d.support().lo;
  try
  {
    rep.pass = true;
    for (int t = 0; t < trials; ++t)
    {
      double const I = local_perturbation_value(G, d, r, random_slack(lo, r, gen()));
      rep.margins.push_back(-I);
      rep.pass = rep.pass && I <= 1e-9;
    }
    rep.residuals = {std::abs(local_perturbation_value(G, d, r, SlackFunction::zero(lo, r)))};
  }
  catch (DomainError const &e)
  {
    rep.pass   = false;
    rep.detail = std::string("precondition violated: ") + e.what();
  }
  return rep;
}

KktSolution kkt_multiplier(CompetitionCdf const &G, ValueDistribution const &d, double r, int grid_size)
{
  double const lo = d.support().lo;
  if (grid_size < 3 || !(r > lo) || !(r < d.support().hi))
  {
    throw DomainError("multiplier needs r inside the support and three grid points");
  }
  double const C    = r * d.survival(r);
  auto const   beta = [&](double x) { return C / d.survival(x); };

  KktSolution k;
  int const   n = grid_size;
  k.x.resize(n);
  for (int i = 0; i < n; ++i)
  {
    k.x[i] = i == n - 1 ? r : lo + (r - lo) * i / (n - 1);
  }
  for (int i = 1; i < n; ++i)
  {
    if (!(G.cdf(beta(k.x[i])) > 0.0))
    {
      throw DomainError("competition never loses to the thresholded bid at " + std::to_string(k.x[i]));
    }
  }

  auto const c0_rate = [&](double y) { return y * G.pdf(beta(y)) * d.pdf(y) / d.survival(y); };
  auto const psi_rate = [&](double y) { return G.cdf(beta(y)) * d.pdf(y) * virtual_value(d, y); };

  k.multiplier.assign(n, 0.0);
  k.bracket.assign(n, 0.0);
  k.psi_integral.assign(n, 0.0);
  double c0 = 0.0;
  for (int i = 1; i < n; ++i)
  {
    c0 += gauss(c0_rate, k.x[i - 1], k.x[i]);
    k.psi_integral[i] = k.psi_integral[i - 1] + gauss(psi_rate, k.x[i - 1], k.x[i]);
    k.multiplier[i]   = c0 / G.cdf(beta(k.x[i]));
  }
  for (int i = 0; i < n; ++i)
  {
    k.bracket[i] = k.x[i] - k.multiplier[i] * beta(k.x[i]);
  }

  for (int i = 1; i + 1 < n; ++i)
  {
    double const x   = k.x[i];
    double const b   = beta(x);
    double const Gb  = G.cdf(b);
    double const dL  = (k.multiplier[i + 1] - k.multiplier[i - 1]) / (k.x[i + 1] - k.x[i - 1]);
    double const rhs = G.pdf(b) / Gb * d.pdf(x) / d.survival(x) * k.bracket[i];
    k.ode_residual   = std::max(k.ode_residual, std::abs(dL - rhs));
    k.identity_residual =
      std::max(k.identity_residual, std::abs(k.bracket[i] + k.psi_integral[i] / (d.survival(x) * Gb)));
  }
  return k;
}

CertificateReport kkt_report(KktSolution const &k)
{
  CertificateReport rep;
  rep.name            = "kkt_multiplier";
  std::size_t const n = k.x.size();
  double const      at0 = k.multiplier.front();
  double min_step = std::numeric_limits<double>::infinity();
  double min_bracket = std::numeric_limits<double>::infinity();
  double max_psi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i)
  {
    min_step = std::min(min_step, k.multiplier[i] - k.multiplier[i - 1]);
  }
  for (std::size_t i = 1; i + 1 < n; ++i)
  {
    min_bracket = std::min(min_bracket, k.bracket[i]);
    max_psi     = std::max(max_psi, k.psi_integral[i]);
  }
  rep.margins   = {-std::abs(at0), min_step, min_bracket, -max_psi};
  rep.residuals = {k.ode_residual, k.identity_residual};
  rep.pass      = std::abs(at0) <= 1e-12 && min_step >= -1e-12 && min_bracket > 0.0 && max_psi < 0.0;
  rep.detail    = "margins: -|L(0)|, min increment of L, min of x - L beta, -max int G(beta) f psi";
  return rep;
}

CertificateReport seller_indifference_check(ShadingStrategy const &s, ValueDistribution const &d, double r)
{
  CertificateReport     rep;
  rep.name              = "seller_indifference";
  BidDistribution const bd = pushforward(d, s, 512, DensityMode::Analytic);
  double const          b0 = bid(s, d.support().lo);
  double const          b1 = bid(s, r);
  double                lo_v = std::numeric_limits<double>::infinity(), hi_v = -lo_v;
  int const             n = 64;
  for (int i = 0; i <= n; ++i)
  {
    double const v = seller_revenue(bd, b0 + (b1 - b0) * i / n);
    lo_v           = std::min(lo_v, v);
    hi_v           = std::max(hi_v, v);
  }
  RevenueCurve const curve = seller_revenue_curve(bd, 512);
  double const       flat  = hi_v - lo_v;
  double const       gap   = std::max(0.0, curve.max - lo_v);
  rep.margins              = {1e-6 - flat, 1e-6 - gap};
  rep.residuals            = {flat, gap};
  rep.pass                 = flat <= 1e-6 && gap <= 1e-6;
  std::ostringstream os;
  os << "plateau value " << 0.5 * (lo_v + hi_v) << " on bids [" << b0 << ", " << b1 << "], curve maximum "
     << curve.max;
  rep.detail = os.str();
  return rep;
}

ShadingStrategy relaxation_improvement(ShadingStrategy const &s, ValueDistribution const &d,
                                       AuctionSpec const &spec)
{
  spec.validate();
  return clip_virtualized_bid(s, d);
}

std::vector<CertificateReport> certificate_suite(AuctionSpec const &spec, ValueDistribution const &d, double r,
                                                 int trials, std::uint64_t seed)
{
  std::vector<CertificateReport> out;
  double const                   lo = d.support().lo;

  CertificateReport pre;
  pre.name = "preconditions";
  try
  {
    if (!(r > lo && r < d.support().hi))
    {
      throw DomainError("r must lie inside the support");
    }
    require_nonpositive_virtual_value(d, lo, r, true);
    pre.pass = true;
  }
  catch (DomainError const &e)
  {
    pre.detail = e.what();
  }
  pre.residuals = {virtual_value(d, std::min(r, d.truncated_support().hi))};
  out.push_back(pre);
  if (!pre.pass)
  {
    return out;
  }

  CompetitionCdf const G = competition_cdf(spec);
  bool const uniform_G = spec.format == Format::LazySecondPrice && spec.K == 2 &&
                         spec.opponent == ValueDistribution::uniform() && r < 1.0;
  if (uniform_G)
  {
    out.push_back(global_optimality_test_uniformG(d, r, trials, seed));
  }
  out.push_back(local_perturbation_test(G, d, r, trials, seed + 1));
  try
  {
    out.push_back(kkt_report(kkt_multiplier(G, d, r)));
  }
  catch (DomainError const &e)
  {
    out.push_back({"kkt_multiplier", false, {}, {}, e.what()});
  }
  out.push_back(seller_indifference_check(thresholded_extension(truthful(), d, r), d, r));

  // Relaxation applied to truthful bidding.
  CertificateReport rel;
  rel.name                    = "relaxation_improvement";
  ShadingStrategy const base  = truthful();
  ShadingStrategy const plus  = relaxation_improvement(base, d, spec);
  double const          u0    = utility(spec, base, d, UtilityMode::relaxed());
  double const          u1    = utility(spec, plus, d, UtilityMode::relaxed());
  double const          exact = utility(spec, plus, d, UtilityMode::exact());
  double                min_h = std::numeric_limits<double>::infinity();
  for (double x : value_grid(d, 4096, kinks(plus, d)))
  {
    min_h = std::min(min_h, virtualized_bid(plus, d, x));
  }
  bool const idem = &clip_virtualized_bid(plus, d).repr() == &plus.repr();
  rel.margins     = {min_h + 1e-9, u1 - u0 + 1e-9, 1e-4 - std::abs(exact - u1)};
  rel.residuals   = {std::abs(exact - u1)};
  rel.pass        = min_h >= -1e-9 && u1 >= u0 - 1e-9 && std::abs(exact - u1) <= 1e-4 && idem;
  rel.detail      = idem ? "idempotent" : "second application changed the strategy";
  out.push_back(rel);
  return out;
}

}  // namespace bidshade
