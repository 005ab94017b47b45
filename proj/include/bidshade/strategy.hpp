#pragma once

#include "bidshade/dist.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace bidshade {

/// A bid map x -> beta(x). Cheap to copy (shared immutable representation).
class ShadingStrategy
{
public:
  struct Repr;

  ShadingStrategy();  // truthful
  explicit ShadingStrategy(std::shared_ptr<Repr const> repr);

  Repr const &repr() const { return *repr_; }

  template <typename Family>
  Family const *as() const;

  /// Short family name used in reports ("truthful", "spline", ...).
  std::string family_name() const;

private:
  std::shared_ptr<Repr const> repr_;
};

using RealMap = std::function<double(double)>;

namespace family {

struct Truthful
{};

struct Affine
{
  double slope;
  double intercept;
};

/// Below r the bid is base(r)(1 - F(r)) / (1 - F(x)), which zeroes the
/// virtualized bid; above r it is the base strategy.
struct Thresholded
{
  ShadingStrategy   base;
  ValueDistribution prior;
  double            r;
  double            level;  // base(r) (1 - F(r))
};

/// First-order spline c1 + c2 x + sum_k c_{k+2} (x - knot_k)_+.
struct Spline
{
  std::vector<double> knots;
  std::vector<double> coeffs;  // knots.size() + 2
};

/// One hidden ReLU layer: b_out + sum_j w_out_j relu(w_in_j x + b_in_j).
struct Mlp
{
  std::vector<double> w_in;
  std::vector<double> b_in;
  std::vector<double> w_out;
  double              b_out = 0.0;

  std::size_t width() const { return w_in.size(); }
};

/// Piecewise-linear bid and slope on a sorted grid. A repeated abscissa marks
/// a slope jump; evaluation is right-continuous there.
struct Tabulated
{
  std::vector<double> x;
  std::vector<double> bid;
  std::vector<double> slope;
};

/// On [lo, hi): replace ? level / (1 - F) : base + level / (1 - F).
/// Outside every segment the base strategy applies.
struct PatchSegment
{
  double lo;
  double hi;
  bool   replace;
  double level;
};

struct Patched
{
  ShadingStrategy           base;
  ValueDistribution         prior;
  std::vector<PatchSegment> segments;  // disjoint, sorted by lo
};

/// Feasible zero-reserve strategy parameterized by a slack function h on
/// [lo, r] against uniform competition; truthful above r.
struct SlackExtension
{
  ValueDistribution   prior;
  double              r;
  double              bid_at_r;
  std::vector<double> x;      // slack grid, x.front() = support lo, x.back() = r
  std::vector<double> slack;  // h on the grid, piecewise linear
  std::vector<double> tail;   // int_{x_i}^r h f
};

}  // namespace family

struct ShadingStrategy::Repr
{
  using Variant = std::variant<family::Truthful, family::Affine, family::Thresholded, family::Spline,
                               family::Mlp, family::Tabulated, family::Patched, family::SlackExtension>;
  Variant v;
};

template <typename Family>
Family const *ShadingStrategy::as() const
{
  return std::get_if<Family>(&repr_->v);
}

// Construction.
ShadingStrategy truthful();
ShadingStrategy affine(double slope, double intercept);
ShadingStrategy spline(std::vector<double> knots, std::vector<double> coeffs);
ShadingStrategy mlp(family::Mlp params);
ShadingStrategy tabulated(std::vector<double> x, std::vector<double> bid, std::vector<double> slope);
ShadingStrategy patched(ShadingStrategy base, ValueDistribution const &prior,
                        std::vector<family::PatchSegment> segments);
ShadingStrategy make_strategy(family::SlackExtension ext);

/// Near-truthful one-layer ReLU network: hidden weights and biases uniform in
/// (-1, 1), output layer least-squares fitted to the identity on the prior's
/// support.
family::Mlp mlp_init(std::size_t width, std::uint64_t seed, ValueDistribution const &prior);

// Evaluation.
double bid(ShadingStrategy const &s, double x);
/// Right derivative at kinks.
double bid_derivative(ShadingStrategy const &s, double x);
double bid_second_derivative(ShadingStrategy const &s, double x);

/// h_beta(x) = beta(x) - beta'(x) (1 - F(x)) / f(x).
double virtualized_bid(ShadingStrategy const &s, ValueDistribution const &d, double x);
double virtualized_bid_derivative(ShadingStrategy const &s, ValueDistribution const &d, double x);

/// Points of the support interior where beta' may jump.
std::vector<double> kinks(ShadingStrategy const &s, ValueDistribution const &d);

/// Smallest value interval on `grid` points of the truncated support where the
/// bid strictly decreases, if any.
std::optional<std::pair<double, double>> find_decrease(ShadingStrategy const &s,
                                                       ValueDistribution const &d, int grid = 4096);

// Construction from virtualized bids.

/// Grid used for tabulated strategies: quantile-spaced nodes merged with
/// evenly spaced nodes over the truncated support, plus the given breakpoints.
std::vector<double> value_grid(ValueDistribution const &d, int size, std::vector<double> const &breaks = {});

/// beta(x) = E[h(T) | T >= x] tabulated on value_grid(d, grid_size, breaks).
/// Inverts the virtualized-bid map: virtualized_bid(result) ~ h.
ShadingStrategy strategy_from_virtualized(RealMap const &h, ValueDistribution const &d,
                                          std::vector<double> const &breaks = {}, int grid_size = 4096);

/// Thresholded extension of `base` below the value r.
ShadingStrategy thresholded_extension(ShadingStrategy const &base, ValueDistribution const &d, double r);

/// The virtualized bid h_K^eps against K - 1 truthful Uniform[0,1] opponents.
RealMap myerson_uniform_virtualized(int K, double eps);

/// eps used when the caller does not pin it: 1e-6 if the support reaches
/// below 1/(K-1), else 0.
double myerson_default_eps(int K, ValueDistribution const &d);

/// beta(x) = E[h_K^eps(T) | T >= x] against K - 1 Uniform[0,1] opponents.
ShadingStrategy myerson_uniform_closed_form(int K, std::optional<double> eps, ValueDistribution const &d);

/// Optimal virtualized bid max(0, psi_Y(H^{-1}(psi_Y^{-1}(x)))) with
/// H = id + F_Y / ((K-1) f_Y) against K - 1 truthful GP opponents.
RealMap myerson_gp_virtualized(ValueDistribution const &opponent, int K);

/// Strategy realizing max(myerson_gp_virtualized(x), eps x).
ShadingStrategy myerson_gp_closed_form(ValueDistribution const &opponent, int K, ValueDistribution const &d,
                                       double eps = 1e-6);

}  // namespace bidshade
