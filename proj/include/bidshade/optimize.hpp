#pragma once

#include "bidshade/auctions.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bidshade {

enum class StepRule
{
  Sgd,
  Adam,
};

struct OptimConfig
{
  std::size_t   batch_size     = 10000;
  std::size_t   steps          = 2000;
  double        learning_rate  = 0.005;
  double        decay          = 0.99;  // learning rate factor ...
  std::size_t   decay_every    = 100;   // ... applied every this many steps
  double        eta            = 1000.0;
  std::uint64_t seed           = 1;
  std::string   family         = "mlp";  // mlp | affine | spline
  std::size_t   width          = 200;
  std::size_t   knots          = 16;
  StepRule      rule           = StepRule::Sgd;
  double        step_tolerance = 1e-10;  // spline: stop when the LP gain is below this
  std::size_t   refit_every    = 50;     // boosted second price: refresh the fitted line
  std::size_t   checkpoint_every = 50;   // sgd: keep the iterate with the best Relaxed utility
  bool          clip_final       = true; // sgd: return clip_virtualized_bid of that iterate

  void validate() const;
};

std::string step_rule_name(StepRule r);
StepRule    parse_step_rule(std::string const &name);

struct OptimReport
{
  OptimConfig              config;
  std::vector<double>      objective;         // per step
  std::vector<double>      objective_stderr;  // per step, 0 for quadrature objectives
  std::vector<double>      reserve_trace;     // reserve value after each step
  std::vector<std::size_t> instability_steps; // steps where the reserve value jumped by > 0.05
  std::vector<std::string> warnings;
  ShadingStrategy          strategy;
  double                   final_utility       = 0.0;  // Exact, by quadrature
  double                   final_reserve_value = 0.0;
  double                   final_reserve_price = 0.0;
  bool                     monotonicity_violation = false;
  std::size_t              best_step = 0;  // iterate returned (0 = initial strategy)
  double                   best_relaxed = 0.0;  // sgd: Relaxed utility of that iterate before clipping
};

inline constexpr double kReserveJump = 0.05;

/// Parameter vector of an Affine, Spline or Mlp strategy (Mlp order: w_in,
/// b_in, w_out, b_out).
std::vector<double> strategy_parameters(ShadingStrategy const &s);
/// Same family and shape as `like`, new parameters.
ShadingStrategy with_parameters(ShadingStrategy const &like, std::vector<double> const &theta);

struct BatchObjective
{
  double              value;
  double              std_error;
  std::vector<double> gradient;  // w.r.t. strategy_parameters
};

/// Sample mean of (x - h(x)) A(x) sigmoid(eta gate(x)) over the given values,
/// with its analytic parameter gradient. For the boosted format the fitted
/// line is held fixed (pass it in; it is otherwise computed from s).
BatchObjective smoothed_batch_objective(AuctionSpec const &spec, ValueDistribution const &d,
                                        ShadingStrategy const &s, std::vector<double> const &xs, double eta,
                                        std::optional<std::pair<double, double>> bsp_line = std::nullopt);

OptimReport sgd_optimize(AuctionSpec const &spec, ValueDistribution const &d, OptimConfig const &config);

/// Knots evenly spaced inside the truncated support, truthful coefficients.
ShadingStrategy truthful_spline(ValueDistribution const &d, std::size_t knots);

/// Gradient vector of the Exact utility over the spline basis.
std::vector<double> spline_gradient(AuctionSpec const &spec, ValueDistribution const &d, ShadingStrategy const &s);

OptimReport spline_steepest_descent(AuctionSpec const &spec, ValueDistribution const &d,
                                    ShadingStrategy const &init, OptimConfig const &config);

/// Runs sgd_optimize or spline_steepest_descent according to config.family.
OptimReport optimize(AuctionSpec const &spec, ValueDistribution const &d, OptimConfig const &config);

std::vector<double> finite_diff_gradient(std::function<double(std::vector<double> const &)> const &objective,
                                         std::vector<double> const &params, double h);

/// step,objective,reserve_value
void write_trace_csv(std::ostream &os, OptimReport const &report);

}  // namespace bidshade
