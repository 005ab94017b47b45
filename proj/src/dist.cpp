#include "bidshade/dist.hpp"

#include "bidshade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace bidshade {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Golden-section maximization of a unimodal function on [lo, hi].
template <typename Fn>
double golden_argmax(Fn const &fn, double lo, double hi)
{
  double const invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double       a = lo, b = hi;
  double       c = b - invphi * (b - a);
  double       d = a + invphi * (b - a);
  double       fc = fn(c), fd = fn(d);
  for (int i = 0; i < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(a)); ++i)
  {
    if (fc > fd)
    {
      b  = d;
      d  = c;
      fd = fc;
      c  = b - invphi * (b - a);
      fc = fn(c);
    }
    else
    {
      a  = c;
      c  = d;
      fc = fd;
      d  = a + invphi * (b - a);
      fd = fn(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

bool Support::bounded() const
{
  return std::isfinite(hi);
}

ValueDistribution::ValueDistribution(Kind kind, std::vector<double> params, GpParams gp)
  : kind_(kind)
  , params_(std::move(params))
  , gp_(gp)
{}

ValueDistribution ValueDistribution::uniform(double lo, double hi)
{
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
  {
    throw DomainError("uniform prior needs finite lo < hi");
  }
  return ValueDistribution(Kind::Uniform, {lo, hi}, GpParams{lo, hi - lo, -1.0});
}

ValueDistribution ValueDistribution::exponential(double rate)
{
  if (!(rate > 0.0) || !std::isfinite(rate))
  {
    throw DomainError("exponential prior needs a positive rate");
  }
  return ValueDistribution(Kind::Exponential, {rate}, GpParams{0.0, 1.0 / rate, 0.0});
}

ValueDistribution ValueDistribution::generalized_pareto(double mu, double sigma, double xi)
{
  if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(xi))
  {
    throw DomainError("generalized Pareto prior needs sigma > 0");
  }
  if (xi >= 1.0)
  {
    // Infinite mean; the virtual value is not increasing.
    throw DomainError("generalized Pareto prior needs xi < 1");
  }
  return ValueDistribution(Kind::GeneralizedPareto, {mu, sigma, xi}, GpParams{mu, sigma, xi});
}

std::string ValueDistribution::name() const
{
  std::ostringstream os;
  switch (kind_)
  {
  case Kind::Uniform:
    os << "uniform(" << params_[0] << "," << params_[1] << ")";
    break;
  case Kind::Exponential:
    os << "exponential(" << params_[0] << ")";
    break;
  case Kind::GeneralizedPareto:
    os << "gpd(" << params_[0] << "," << params_[1] << "," << params_[2] << ")";
    break;
  }
  return os.str();
}

Support ValueDistribution::support() const
{
  if (gp_.xi < 0.0)
  {
    return {gp_.mu, gp_.mu - gp_.sigma / gp_.xi};
  }
  return {gp_.mu, kInf};
}

Support ValueDistribution::truncated_support() const
{
  Support s = support();
  if (!s.bounded())
  {
    s.hi = quantile(1.0 - kTailMass);
  }
  return s;
}

bool ValueDistribution::in_support(double x) const
{
  Support const s = support();
  return x >= s.lo && x <= s.hi;
}

double ValueDistribution::cdf(double x) const
{
  Support const s = support();
  if (x <= s.lo)
  {
    return 0.0;
  }
  if (x >= s.hi)
  {
    return 1.0;
  }
  switch (kind_)
  {
  case Kind::Uniform:
    return (x - params_[0]) / (params_[1] - params_[0]);
  case Kind::Exponential:
    return -std::expm1(-params_[0] * x);
  case Kind::GeneralizedPareto:
    break;
  }
  double const z = (x - gp_.mu) / gp_.sigma;
  if (gp_.xi == 0.0)
  {
    return -std::expm1(-z);
  }
  return 1.0 - std::pow(1.0 + gp_.xi * z, -1.0 / gp_.xi);
}

double ValueDistribution::survival(double x) const
{
  Support const s = support();
  if (x <= s.lo)
  {
    return 1.0;
  }
  if (x >= s.hi)
  {
    return 0.0;
  }
  double const z = (x - gp_.mu) / gp_.sigma;
  if (gp_.xi == 0.0)
  {
    return std::exp(-z);
  }
  if (gp_.xi == -1.0)
  {
    return 1.0 - z;
  }
  return std::pow(1.0 + gp_.xi * z, -1.0 / gp_.xi);
}

double ValueDistribution::survival_quantile(double s) const
{
  if (!(s >= 0.0 && s <= 1.0))
  {
    throw DomainError("survival level outside [0, 1]");
  }
  if (s == 1.0)
  {
    return support().lo;
  }
  if (s == 0.0)
  {
    return support().hi;
  }
  if (gp_.xi == 0.0)
  {
    return gp_.mu - gp_.sigma * std::log(s);
  }
  return gp_.mu + gp_.sigma * std::expm1(-gp_.xi * std::log(s)) / gp_.xi;
}

double ValueDistribution::pdf(double x) const
{
  Support const s = support();
  if (x < s.lo || x > s.hi)
  {
    return 0.0;
  }
  switch (kind_)
  {
  case Kind::Uniform:
    return 1.0 / (params_[1] - params_[0]);
  case Kind::Exponential:
    return params_[0] * std::exp(-params_[0] * x);
  case Kind::GeneralizedPareto:
    break;
  }
  double const z = (x - gp_.mu) / gp_.sigma;
  if (gp_.xi == 0.0)
  {
    return std::exp(-z) / gp_.sigma;
  }
  return std::pow(1.0 + gp_.xi * z, -1.0 / gp_.xi - 1.0) / gp_.sigma;
}

double ValueDistribution::pdf_derivative(double x) const
{
  Support const s = support();
  if (x < s.lo || x > s.hi)
  {
    return 0.0;
  }
  switch (kind_)
  {
  case Kind::Uniform:
    return 0.0;
  case Kind::Exponential:
    return -params_[0] * params_[0] * std::exp(-params_[0] * x);
  case Kind::GeneralizedPareto:
    break;
  }
  double const z = (x - gp_.mu) / gp_.sigma;
  if (gp_.xi == 0.0)
  {
    return -std::exp(-z) / (gp_.sigma * gp_.sigma);
  }
  return -(1.0 + gp_.xi) * std::pow(1.0 + gp_.xi * z, -1.0 / gp_.xi - 2.0) / (gp_.sigma * gp_.sigma);
}

double ValueDistribution::quantile(double p) const
{
  if (!(p >= 0.0 && p <= 1.0))
  {
    throw DomainError("quantile level outside [0, 1]");
  }
  Support const s = support();
  if (p == 0.0)
  {
    return s.lo;
  }
  if (p == 1.0)
  {
    return s.hi;
  }
  switch (kind_)
  {
  case Kind::Uniform:
    return params_[0] + p * (params_[1] - params_[0]);
  case Kind::Exponential:
    return -std::log1p(-p) / params_[0];
  case Kind::GeneralizedPareto:
    break;
  }
  if (gp_.xi == 0.0)
  {
    return gp_.mu - gp_.sigma * std::log1p(-p);
  }
  return gp_.mu + gp_.sigma * std::expm1(-gp_.xi * std::log1p(-p)) / gp_.xi;
}

double ValueDistribution::mills_ratio(double x) const
{
  if (!in_support(x))
  {
    throw DomainError("value outside prior support");
  }
  switch (kind_)
  {
  case Kind::Uniform:
    return params_[1] - x;
  case Kind::Exponential:
    return 1.0 / params_[0];
  case Kind::GeneralizedPareto:
    break;
  }
  return gp_.sigma + gp_.xi * (x - gp_.mu);
}

double ValueDistribution::virtual_value_root() const
{
  return (gp_.sigma - gp_.xi * gp_.mu) / (1.0 - gp_.xi);
}

bool ValueDistribution::operator==(ValueDistribution const &other) const
{
  return kind_ == other.kind_ && params_ == other.params_;
}

double virtual_value(ValueDistribution const &d, double x)
{
  if (!d.in_support(x))
  {
    throw DomainError("virtual value requested outside the support");
  }
  if (d.pdf(x) < ValueDistribution::kDensityFloor)
  {
    throw DomainError("virtual value requested where the density vanishes");
  }
  return x - d.mills_ratio(x);
}

double monopoly_price(ValueDistribution const &d)
{
  Support const s = d.truncated_support();
  if (d.is_regular())
  {
    return std::clamp(d.virtual_value_root(), s.lo, s.hi);
  }
  auto revenue = [&d](double r) { return r * (1.0 - d.cdf(r)); };
  constexpr int kGrid = 10000;
  double        step  = (s.hi - s.lo) / (kGrid - 1);
  int           best  = 0;
  double        bestv = -kInf;
  for (int i = 0; i < kGrid; ++i)
  {
    double const v = revenue(s.lo + i * step);
    if (v > bestv)
    {
      bestv = v;
      best  = i;
    }
  }
  double const a = s.lo + std::max(0, best - 1) * step;
  double const b = s.lo + std::min(kGrid - 1, best + 1) * step;
  double const r = golden_argmax(revenue, a, b);
  return revenue(r) >= bestv ? r : s.lo + best * step;
}

double hazard_rate(ValueDistribution const &d, double x)
{
  if (d.cdf(x) >= 1.0)
  {
    throw DomainError("hazard rate undefined where F(x) = 1");
  }
  double const m = d.mills_ratio(x);
  if (!(m > 0.0))
  {
    throw DomainError("hazard rate undefined where F(x) = 1");
  }
  return 1.0 / m;
}

double unit_uniform(std::uint64_t bits)
{
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<double> sample(ValueDistribution const &d, std::uint64_t seed, std::size_t n)
{
  std::mt19937_64     gen(seed);
  std::vector<double> out(n);
  for (auto &x : out)
  {
    x = d.quantile(unit_uniform(gen()));
  }
  return out;
}

}  // namespace bidshade
