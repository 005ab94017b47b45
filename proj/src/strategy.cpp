#include "bidshade/strategy.hpp"

#include "bidshade/errors.hpp"
#include "bidshade/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace bidshade {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ShadingStrategy wrap(ShadingStrategy::Repr::Variant v)
{
  return ShadingStrategy(std::make_shared<ShadingStrategy::Repr const>(ShadingStrategy::Repr{std::move(v)}));
}

// Cubic Hermite evaluation of a Tabulated strategy; order 0, 1 or 2.
double tabulated_eval(family::Tabulated const &t, double x, int order)
{
  std::size_t const n = t.x.size();
  auto const        j = static_cast<std::size_t>(std::upper_bound(t.x.begin(), t.x.end(), x) - t.x.begin());
  if (j == 0 || j == n)
  {
    std::size_t const k = j == 0 ? 0 : n - 1;
    switch (order)
    {
    case 0:
      return t.bid[k] + t.slope[k] * (x - t.x[k]);
    case 1:
      return t.slope[k];
    default:
      return 0.0;
    }
  }
  std::size_t const i   = j - 1;
  double const      dx  = t.x[j] - t.x[i];
  double const      u   = (x - t.x[i]) / dx;
  double const      y0  = t.bid[i];
  double const      y1  = t.bid[j];
  double const      m0  = t.slope[i] * dx;
  double const      m1  = t.slope[j] * dx;
  double const      u2  = u * u;
  double const      u3  = u2 * u;
  switch (order)
  {
  case 0:
    return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * m1;
  case 1:
    return ((6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * m0 + (-6 * u2 + 6 * u) * y1 + (3 * u2 - 2 * u) * m1) /
           dx;
  default:
    return ((12 * u - 6) * y0 + (6 * u - 4) * m0 + (-12 * u + 6) * y1 + (6 * u - 2) * m1) / (dx * dx);
  }
}

family::PatchSegment const *find_segment(family::Patched const &p, double x)
{
  for (auto const &seg : p.segments)
  {
    if (x >= seg.lo && x < seg.hi)
    {
      return &seg;
    }
  }
  return nullptr;
}

// level / S(x) and its first two derivatives.
double level_term(ValueDistribution const &d, double level, double x, int order)
{
  double const S = d.survival(x);
  if (order == 0)
  {
    return level / S;
  }
  double const f = d.pdf(x);
  if (order == 1)
  {
    return level * f / (S * S);
  }
  return level * (d.pdf_derivative(x) * S + 2.0 * f * f) / (S * S * S);
}

std::size_t slack_cell(family::SlackExtension const &e, double x)
{
  auto j = static_cast<std::size_t>(std::upper_bound(e.x.begin(), e.x.end(), x) - e.x.begin());
  j      = std::clamp<std::size_t>(j, 1, e.x.size() - 1);
  return j - 1;
}

double slack_value(family::SlackExtension const &e, std::size_t i, double x)
{
  double const t = (x - e.x[i]) / (e.x[i + 1] - e.x[i]);
  return e.slack[i] + t * (e.slack[i + 1] - e.slack[i]);
}

double slack_slope(family::SlackExtension const &e, std::size_t i)
{
  return (e.slack[i + 1] - e.slack[i]) / (e.x[i + 1] - e.x[i]);
}

double slack_bid(family::SlackExtension const &e, double x)
{
  if (x >= e.r)
  {
    return x;
  }
  std::size_t const i = slack_cell(e, x);
  auto const       &gl = quad::gauss_legendre(8);
  double const      a = e.x[i];
  double            partial = 0.0;
  for (std::size_t k = 0; k < gl.nodes.size(); ++k)
  {
    double const t = a + 0.5 * (x - a) * (gl.nodes[k] + 1.0);
    partial += gl.weights[k] * slack_value(e, i, t) * e.prior.pdf(t);
  }
  partial *= 0.5 * (x - a);
  double const S = e.prior.survival(x);
  double const C = e.bid_at_r * e.prior.survival(e.r);
  double const N = C * C + 2.0 * (e.tail[i] - partial - slack_value(e, i, x) * S);
  if (N < 0.0)
  {
    throw InfeasibleSlackError("slack extension has a negative squared bid");
  }
  return std::sqrt(N) / S;
}

double slack_bid_derivative(family::SlackExtension const &e, double x)
{
  if (x >= e.r)
  {
    return 1.0;
  }
  double const b = slack_bid(e, x);
  double const S = e.prior.survival(x);
  return (b * b * e.prior.pdf(x) - slack_slope(e, slack_cell(e, x))) / (b * S);
}

}  // namespace

ShadingStrategy::ShadingStrategy()
  : repr_(std::make_shared<Repr const>(Repr{family::Truthful{}}))
{}

ShadingStrategy::ShadingStrategy(std::shared_ptr<Repr const> repr)
  : repr_(std::move(repr))
{}

std::string ShadingStrategy::family_name() const
{
  return std::visit(overloaded{[](family::Truthful const &) { return "truthful"; },
                               [](family::Affine const &) { return "affine"; },
                               [](family::Thresholded const &) { return "thresholded_extension"; },
                               [](family::Spline const &) { return "spline"; },
                               [](family::Mlp const &) { return "mlp"; },
                               [](family::Tabulated const &) { return "tabulated"; },
                               [](family::Patched const &) { return "patched"; },
                               [](family::SlackExtension const &) { return "slack_extension"; }},
                    repr_->v);
}

ShadingStrategy truthful()
{
  return ShadingStrategy();
}

ShadingStrategy affine(double slope, double intercept)
{
  return wrap(family::Affine{slope, intercept});
}

ShadingStrategy spline(std::vector<double> knots, std::vector<double> coeffs)
{
  if (coeffs.size() != knots.size() + 2)
  {
    throw DomainError("spline needs knots.size() + 2 coefficients");
  }
  for (std::size_t k = 1; k < knots.size(); ++k)
  {
    if (!(knots[k] > knots[k - 1]))
    {
      throw DomainError("spline knots must be strictly increasing");
    }
  }
  return wrap(family::Spline{std::move(knots), std::move(coeffs)});
}

ShadingStrategy mlp(family::Mlp params)
{
  std::size_t const w = params.w_in.size();
  if (w == 0 || params.b_in.size() != w || params.w_out.size() != w)
  {
    throw DomainError("mlp layers have mismatched widths");
  }
  return wrap(std::move(params));
}

ShadingStrategy tabulated(std::vector<double> x, std::vector<double> bid, std::vector<double> slope)
{
  if (x.size() < 2 || bid.size() != x.size() || slope.size() != x.size())
  {
    throw DomainError("tabulated strategy needs at least two nodes of equal-length columns");
  }
  for (std::size_t i = 1; i < x.size(); ++i)
  {
    if (x[i] < x[i - 1] || (i >= 2 && x[i] == x[i - 2]))
    {
      throw DomainError("tabulated abscissae must be sorted with at most double nodes");
    }
  }
  if (x.front() == x[1] || x.back() == x[x.size() - 2])
  {
    throw DomainError("tabulated grid cannot start or end with a double node");
  }
  return wrap(family::Tabulated{std::move(x), std::move(bid), std::move(slope)});
}

ShadingStrategy patched(ShadingStrategy base, ValueDistribution const &prior,
                        std::vector<family::PatchSegment> segments)
{
  std::sort(segments.begin(), segments.end(), [](auto const &a, auto const &b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < segments.size(); ++i)
  {
    if (!(segments[i].hi > segments[i].lo) || (i > 0 && segments[i].lo < segments[i - 1].hi))
    {
      throw DomainError("patch segments must be nonempty and disjoint");
    }
  }
  return wrap(family::Patched{std::move(base), prior, std::move(segments)});
}

ShadingStrategy make_strategy(family::SlackExtension ext)
{
  if (ext.x.size() < 2 || ext.slack.size() != ext.x.size() || ext.tail.size() != ext.x.size())
  {
    throw DomainError("slack extension grid is malformed");
  }
  return wrap(std::move(ext));
}

family::Mlp mlp_init(std::size_t width, std::uint64_t seed, ValueDistribution const &prior)
{
  if (width == 0)
  {
    throw DomainError("mlp width must be positive");
  }
  family::Mlp  net;
  double const a = 1.0;  // fan-in of the hidden layer is one
  std::mt19937_64 gen(seed);
  net.w_in.resize(width);
  net.b_in.resize(width);
  for (std::size_t j = 0; j < width; ++j)
  {
    net.w_in[j] = a * (2.0 * unit_uniform(gen()) - 1.0);
    net.b_in[j] = a * (2.0 * unit_uniform(gen()) - 1.0);
  }

  // Ridge least squares of the identity on a value grid.
  std::vector<double> const xs = value_grid(prior, 512);
  Eigen::MatrixXd           A(xs.size(), width + 1);
  Eigen::VectorXd           y(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
  {
    for (std::size_t j = 0; j < width; ++j)
    {
      A(i, j) = std::max(0.0, net.w_in[j] * xs[i] + net.b_in[j]);
    }
    A(i, width) = 1.0;
    y(i)        = xs[i];
  }
  double const    lambda = 1e-6 * static_cast<double>(xs.size());
  Eigen::MatrixXd M      = A.transpose() * A;
  M.diagonal().array() += lambda;
  Eigen::VectorXd const coef = M.ldlt().solve(A.transpose() * y);
  net.w_out.assign(coef.data(), coef.data() + width);
  net.b_out = coef(width);
  return net;
}

double bid(ShadingStrategy const &s, double x)
{
  return std::visit(
    overloaded{[&](family::Truthful const &) { return x; },
               [&](family::Affine const &a) { return a.slope * x + a.intercept; },
               [&](family::Thresholded const &t) {
                 return x < t.r ? level_term(t.prior, t.level, x, 0) : bid(t.base, x);
               },
               [&](family::Spline const &sp) {
                 double v = sp.coeffs[0] + sp.coeffs[1] * x;
                 for (std::size_t k = 0; k < sp.knots.size() && sp.knots[k] < x; ++k)
                 {
                   v += sp.coeffs[k + 2] * (x - sp.knots[k]);
                 }
                 return v;
               },
               [&](family::Mlp const &m) {
                 double v = m.b_out;
                 for (std::size_t j = 0; j < m.width(); ++j)
                 {
                   v += m.w_out[j] * std::max(0.0, m.w_in[j] * x + m.b_in[j]);
                 }
                 return v;
               },
               [&](family::Tabulated const &t) { return tabulated_eval(t, x, 0); },
               [&](family::Patched const &p) {
                 auto const *seg = find_segment(p, x);
                 if (seg == nullptr)
                 {
                   return bid(p.base, x);
                 }
                 double const extra = level_term(p.prior, seg->level, x, 0);
                 return seg->replace ? extra : bid(p.base, x) + extra;
               },
               [&](family::SlackExtension const &e) { return slack_bid(e, x); }},
    s.repr().v);
}

double bid_derivative(ShadingStrategy const &s, double x)
{
  return std::visit(
    overloaded{[&](family::Truthful const &) { return 1.0; },
               [&](family::Affine const &a) { return a.slope; },
               [&](family::Thresholded const &t) {
                 return x < t.r ? level_term(t.prior, t.level, x, 1) : bid_derivative(t.base, x);
               },
               [&](family::Spline const &sp) {
                 double v = sp.coeffs[1];
                 for (std::size_t k = 0; k < sp.knots.size() && sp.knots[k] <= x; ++k)
                 {
                   v += sp.coeffs[k + 2];
                 }
                 return v;
               },
               [&](family::Mlp const &m) {
                 double v = 0.0;
                 for (std::size_t j = 0; j < m.width(); ++j)
                 {
                   double const pre = m.w_in[j] * x + m.b_in[j];
                   // Right derivative: a unit with w_in > 0 is active just right of its kink.
                   if (pre > 0.0 || (pre == 0.0 && m.w_in[j] > 0.0))
                   {
                     v += m.w_out[j] * m.w_in[j];
                   }
                 }
                 return v;
               },
               [&](family::Tabulated const &t) { return tabulated_eval(t, x, 1); },
               [&](family::Patched const &p) {
                 auto const *seg = find_segment(p, x);
                 if (seg == nullptr)
                 {
                   return bid_derivative(p.base, x);
                 }
                 double const extra = level_term(p.prior, seg->level, x, 1);
                 return seg->replace ? extra : bid_derivative(p.base, x) + extra;
               },
               [&](family::SlackExtension const &e) { return slack_bid_derivative(e, x); }},
    s.repr().v);
}

double bid_second_derivative(ShadingStrategy const &s, double x)
{
  return std::visit(
    overloaded{[&](family::Truthful const &) { return 0.0; },
               [&](family::Affine const &) { return 0.0; },
               [&](family::Thresholded const &t) {
                 return x < t.r ? level_term(t.prior, t.level, x, 2) : bid_second_derivative(t.base, x);
               },
               [&](family::Spline const &) { return 0.0; },
               [&](family::Mlp const &) { return 0.0; },
               [&](family::Tabulated const &t) { return tabulated_eval(t, x, 2); },
               [&](family::Patched const &p) {
                 auto const *seg = find_segment(p, x);
                 if (seg == nullptr)
                 {
                   return bid_second_derivative(p.base, x);
                 }
                 double const extra = level_term(p.prior, seg->level, x, 2);
                 return seg->replace ? extra : bid_second_derivative(p.base, x) + extra;
               },
               [&](family::SlackExtension const &e) {
                 if (x >= e.r)
                 {
                   return 0.0;
                 }
                 // The slack is only piecewise linear, so beta'' is taken numerically inside a cell.
                 std::size_t const i  = slack_cell(e, x);
                 double const      lo = e.x[i], hi = e.x[i + 1];
                 double const      dh = 1e-6 * (hi - lo);
                 double const      a  = std::max(lo, x - dh);
                 double const      b  = std::min(std::nextafter(hi, lo), x + dh);
                 return (slack_bid_derivative(e, b) - slack_bid_derivative(e, a)) / (b - a);
               }},
    s.repr().v);
}

double virtualized_bid(ShadingStrategy const &s, ValueDistribution const &d, double x)
{
  if (!d.in_support(x))
  {
    throw DomainError("virtualized bid requested outside the support");
  }
  if (d.pdf(x) < ValueDistribution::kDensityFloor)
  {
    throw DomainError("virtualized bid requested where the density vanishes");
  }
  return bid(s, x) - bid_derivative(s, x) * d.mills_ratio(x);
}

double virtualized_bid_derivative(ShadingStrategy const &s, ValueDistribution const &d, double x)
{
  if (!d.in_support(x) || d.pdf(x) < ValueDistribution::kDensityFloor)
  {
    throw DomainError("virtualized bid derivative requested outside the support");
  }
  double const m = d.mills_ratio(x);
  return bid_derivative(s, x) * (2.0 + m * d.pdf_derivative(x) / d.pdf(x)) - bid_second_derivative(s, x) * m;
}

std::vector<double> kinks(ShadingStrategy const &s, ValueDistribution const &d)
{
  Support const       sup = d.truncated_support();
  std::vector<double> out;
  auto                add = [&](double x) {
    if (x > sup.lo && x < sup.hi)
    {
      out.push_back(x);
    }
  };
  std::visit(overloaded{[&](family::Truthful const &) {},
                        [&](family::Affine const &) {},
                        [&](family::Thresholded const &t) {
                          add(t.r);
                          for (double k : kinks(t.base, d))
                          {
                            if (k > t.r)
                            {
                              add(k);
                            }
                          }
                        },
                        [&](family::Spline const &sp) {
                          for (double k : sp.knots)
                          {
                            add(k);
                          }
                        },
                        [&](family::Mlp const &m) {
                          for (std::size_t j = 0; j < m.width(); ++j)
                          {
                            if (m.w_in[j] != 0.0)
                            {
                              add(-m.b_in[j] / m.w_in[j]);
                            }
                          }
                        },
                        [&](family::Tabulated const &t) {
                          for (std::size_t i = 1; i < t.x.size(); ++i)
                          {
                            if (t.x[i] == t.x[i - 1])
                            {
                              add(t.x[i]);
                            }
                          }
                        },
                        [&](family::Patched const &p) {
                          for (auto const &seg : p.segments)
                          {
                            add(seg.lo);
                            add(seg.hi);
                          }
                          for (double k : kinks(p.base, d))
                          {
                            add(k);
                          }
                        },
                        [&](family::SlackExtension const &e) {
                          for (double k : e.x)
                          {
                            add(k);
                          }
                          add(e.r);
                        }},
             s.repr().v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<std::pair<double, double>> find_decrease(ShadingStrategy const &s, ValueDistribution const &d,
                                                       int grid)
{
  Support const sup  = d.truncated_support();
  double const  step = (sup.hi - sup.lo) / (grid - 1);
  double        prev = bid(s, sup.lo);
  for (int i = 1; i < grid; ++i)
  {
    double const x   = sup.lo + i * step;
    double const cur = bid(s, x);
    if (cur < prev - 1e-12 * std::max(1.0, std::abs(prev)))
    {
      double lo = x - step;
      double hi = x;
      double p  = cur;
      for (int k = i + 1; k < grid; ++k)
      {
        double const xk = sup.lo + k * step;
        double const ck = bid(s, xk);
        if (!(ck < p))
        {
          break;
        }
        hi = xk;
        p  = ck;
      }
      return std::make_pair(lo, hi);
    }
    prev = cur;
  }
  return std::nullopt;
}

std::vector<double> value_grid(ValueDistribution const &d, int size, std::vector<double> const &breaks)
{
  if (size < 4)
  {
    throw DomainError("value grid needs at least four nodes");
  }
  Support const sup     = d.truncated_support();
  double const  pmax    = d.support().bounded() ? 1.0 : 1.0 - ValueDistribution::kTailMass;
  int const     nq      = size / 2;
  int const     ne      = size - nq;
  double const  tol     = 1e-9 * std::max(1.0, sup.hi - sup.lo);
  std::vector<double> nodes;
  nodes.reserve(static_cast<std::size_t>(size) + breaks.size());
  for (int i = 0; i < nq; ++i)
  {
    nodes.push_back(i + 1 == nq ? sup.hi : d.quantile(pmax * i / (nq - 1)));
  }
  for (int i = 0; i < ne; ++i)
  {
    nodes.push_back(i + 1 == ne ? sup.hi : sup.lo + (sup.hi - sup.lo) * i / (ne - 1));
  }
  std::vector<double> inner;
  for (double b : breaks)
  {
    if (b > sup.lo + tol && b < sup.hi - tol)
    {
      inner.push_back(b);
    }
  }
  std::sort(inner.begin(), inner.end());
  std::sort(nodes.begin(), nodes.end());
  std::vector<double> out;
  for (double x : nodes)
  {
    auto it = std::lower_bound(inner.begin(), inner.end(), x - tol);
    if (it != inner.end() && *it <= x + tol)
    {
      continue;
    }
    if (!out.empty() && x - out.back() <= tol)
    {
      continue;
    }
    out.push_back(x);
  }
  out.insert(out.end(), inner.begin(), inner.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ShadingStrategy strategy_from_virtualized(RealMap const &h, ValueDistribution const &d,
                                          std::vector<double> const &breaks, int grid_size)
{
  std::vector<double> const x   = value_grid(d, grid_size, breaks);
  std::size_t const         n   = x.size();
  Support const             sup = d.truncated_support();
  auto const               &gl  = quad::gauss_legendre(8);

  // tail[i] = int_{x_i}^inf h f, accumulated from the top so that small tail
  // masses keep their relative accuracy.
  std::vector<double> tail(n, 0.0);
  if (!d.support().bounded())
  {
    // Above the truncation point: substitute 1 - F(t) = S_n e^{-s}.
    double const Sn = d.survival(x[n - 1]);
    double       acc = 0.0;
    int const    panels = 64;
    double const smax = 40.0;
    for (int p = 0; p < panels; ++p)
    {
      double const a = smax * p / panels;
      double const b = smax * (p + 1) / panels;
      for (std::size_t k = 0; k < gl.nodes.size(); ++k)
      {
        double const s = a + 0.5 * (b - a) * (gl.nodes[k] + 1.0);
        acc += 0.5 * (b - a) * gl.weights[k] * h(d.survival_quantile(Sn * std::exp(-s))) * std::exp(-s);
      }
    }
    tail[n - 1] = Sn * acc;
  }
  for (std::size_t i = n - 1; i-- > 0;)
  {
    double const a   = x[i];
    double const b   = x[i + 1];
    double       acc = 0.0;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k)
    {
      double const t = a + 0.5 * (b - a) * (gl.nodes[k] + 1.0);
      acc += gl.weights[k] * h(t) * d.pdf(t);
    }
    tail[i] = tail[i + 1] + 0.5 * (b - a) * acc;
  }

  double const xi    = d.gp().xi;
  double const scale = sup.hi - sup.lo;
  std::set<double> const breakset(breaks.begin(), breaks.end());
  std::vector<double>    gx, gb, gs;
  gx.reserve(n + breaks.size());
  gb.reserve(n + breaks.size());
  gs.reserve(n + breaks.size());
  for (std::size_t i = 0; i < n; ++i)
  {
    double const S = d.survival(x[i]);
    double const m = d.mills_ratio(x[i]);
    double       b;
    double       slope;
    if (m <= 1e-9 * scale || S <= 0.0)
    {
      // Upper endpoint of a bounded support: beta -> h, beta' -> h' / (1 - xi).
      double const dh = 1e-6 * scale;
      b               = h(x[i]);
      slope           = (h(x[i]) - h(x[i] - dh)) / dh / (1.0 - xi);
    }
    else
    {
      b     = tail[i] / S;
      slope = (b - h(x[i])) / m;
    }
    if (!std::isfinite(b) || !std::isfinite(slope))
    {
      throw NumericError("virtualized bid is not integrable against the prior");
    }
    if (breakset.count(x[i]) != 0 && i > 0 && i + 1 < n)
    {
      double const left = (b - h(x[i] - 1e-10 * scale)) / m;
      gx.push_back(x[i]);
      gb.push_back(b);
      gs.push_back(left);
    }
    gx.push_back(x[i]);
    gb.push_back(b);
    gs.push_back(slope);
  }
  return tabulated(std::move(gx), std::move(gb), std::move(gs));
}

ShadingStrategy thresholded_extension(ShadingStrategy const &base, ValueDistribution const &d, double r)
{
  Support const sup = d.support();
  if (!(r > sup.lo && r < sup.hi))
  {
    throw DomainError("threshold must lie in the support interior");
  }
  return wrap(family::Thresholded{base, d, r, bid(base, r) * d.survival(r)});
}

RealMap myerson_uniform_virtualized(int K, double eps)
{
  if (K < 2 || !(eps >= 0.0))
  {
    throw DomainError("closed-form Myerson shading needs K >= 2 and eps >= 0");
  }
  double const k  = K;
  double const xe = (1.0 + eps) / (k - 1.0);
  return [k, eps, xe](double x) {
    if (x < xe)
    {
      return (k - 1.0) / k * eps / (1.0 + eps) * x;
    }
    return (k - 1.0) / k * (x - 1.0 / (k - 1.0));
  };
}

double myerson_default_eps(int K, ValueDistribution const &d)
{
  return d.support().lo < 1.0 / (K - 1.0) ? 1e-6 : 0.0;
}

ShadingStrategy myerson_uniform_closed_form(int K, std::optional<double> eps, ValueDistribution const &d)
{
  if (K < 2)
  {
    throw DomainError("closed-form Myerson shading needs K >= 2");
  }
  Support const sup = d.support();
  if (!sup.bounded() || sup.lo < 0.0 || sup.hi > (K + 1.0) / (K - 1.0) + 1e-12)
  {
    throw DomainError("closed-form Myerson shading needs a prior supported in [0, (K+1)/(K-1)]");
  }
  double const e = eps.value_or(myerson_default_eps(K, d));
  return strategy_from_virtualized(myerson_uniform_virtualized(K, e), d, {(1.0 + e) / (K - 1.0)});
}

namespace {

struct GpMyerson
{
  ValueDistribution opp;
  double            k;
  double            c;
  double            rstar;

  double H(double u) const
  {
    double const f = opp.pdf(u);
    return u + opp.cdf(u) / ((k - 1.0) * f);
  }

  double operator()(double x) const
  {
    double const v   = x / c + rstar;
    double const top = opp.support().hi;
    if (v <= H(rstar))
    {
      return 0.0;
    }
    if (std::isfinite(top) && v >= H(top))
    {
      return c * (top - rstar);
    }
    double lo = rstar;
    double hi = rstar + opp.gp().sigma;
    while (H(hi) < v)
    {
      lo = hi;
      hi = rstar + 2.0 * (hi - rstar);
    }
    if (std::isfinite(top))
    {
      hi = std::min(hi, top);
    }
    double const u = quad::bisect([&](double t) { return H(t) - v; }, lo, hi);
    return std::max(0.0, c * (u - rstar));
  }
};

}  // namespace

RealMap myerson_gp_virtualized(ValueDistribution const &opponent, int K)
{
  if (K < 2)
  {
    throw DomainError("Myerson shading needs K >= 2");
  }
  if (!opponent.is_regular())
  {
    throw DomainError("Myerson closed form needs a regular GP opponent");
  }
  return GpMyerson{opponent, static_cast<double>(K), opponent.virtual_value_slope(), opponent.virtual_value_root()};
}

ShadingStrategy myerson_gp_closed_form(ValueDistribution const &opponent, int K, ValueDistribution const &d,
                                       double eps)
{
  GpMyerson const gm{opponent, static_cast<double>(K), opponent.virtual_value_slope(),
                     opponent.virtual_value_root()};
  RealMap const   h = myerson_gp_virtualized(opponent, K);
  std::vector<double> breaks{gm.c * (gm.H(gm.rstar) - gm.rstar)};
  if (opponent.support().bounded())
  {
    breaks.push_back(gm.c * (gm.H(opponent.support().hi) - gm.rstar));
  }
  return strategy_from_virtualized([h, eps](double x) { return std::max(h(x), eps * x); }, d, breaks);
}

}  // namespace bidshade
