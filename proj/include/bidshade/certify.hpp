#pragma once

#include "bidshade/auctions.hpp"
#include "bidshade/dist.hpp"
#include "bidshade/strategy.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bidshade {

/// Nonnegative slack h on [lo, r] (minus the seller revenue on [x, r]),
/// piecewise linear on a grid, vanishing at both ends.
class SlackFunction
{
public:
  SlackFunction(std::vector<double> x, std::vector<double> h);

  /// Samples fn on n evenly spaced points of [lo, r].
  static SlackFunction sample(std::function<double(double)> const &fn, double lo, double r, int n = 513);
  static SlackFunction zero(double lo, double r, int n = 513);

  std::vector<double> const &x() const { return x_; }
  std::vector<double> const &h() const { return h_; }
  double                     lo() const { return x_.front(); }
  double                     r() const { return x_.back(); }

  double operator()(double t) const;
  double slope(double t) const;
  SlackFunction scaled(double c) const;

private:
  std::vector<double> x_;
  std::vector<double> h_;
};

struct CertificateReport
{
  std::string         name;
  bool                pass = false;
  std::vector<double> margins;
  std::vector<double> residuals;
  std::string         detail;
};

/// beta(x; h) against G(b) = min(b, 1): the unique strategy with beta(r) = r
/// whose seller revenue on [x, r] is -h(x); truthful above r. Throws
/// InfeasibleSlackError when beta^2 < 0 or beta > 1 somewhere on [lo, r].
ShadingStrategy feasible_family_uniformG(ValueDistribution const &d, double r, SlackFunction const &h);

/// Pi(h) = int_lo^r x beta(x; h) f(x) dx.
double buyer_value_uniformG(ValueDistribution const &d, double r, SlackFunction const &h);

/// d/deps Pi(eps h) at eps = 0.
double buyer_value_first_order(ValueDistribution const &d, double r, SlackFunction const &h);

/// Sum of 3 to 8 nonnegative hats with knots inside (lo, r).
SlackFunction random_slack(double lo, double r, std::uint64_t seed, int n = 513);

/// Largest multiple c <= cap of h for which beta(.; c h) is feasible.
double feasible_scale_uniformG(ValueDistribution const &d, double r, SlackFunction const &h, double cap = 64.0);

/// Pi(h) <= Pi(0) + 1e-9 for `trials` random feasible slacks. Fails without
/// sampling when psi_F > 0 somewhere on [lo, r] or r >= 1.
CertificateReport global_optimality_test_uniformG(ValueDistribution const &d, double r, int trials,
                                                  std::uint64_t seed);

/// I = int_lo^r x f g(beta*) rho beta* dx for the perturbation rho of the
/// thresholded strategy beta* = r (1 - F(r)) / (1 - F) generated by h.
double local_perturbation_value(CompetitionCdf const &G, ValueDistribution const &d, double r,
                                SlackFunction const &h);

CertificateReport local_perturbation_test(CompetitionCdf const &G, ValueDistribution const &d, double r,
                                          int trials, std::uint64_t seed);

struct KktSolution
{
  std::vector<double> x;
  std::vector<double> multiplier;    // L(x) = C0(x) / G(beta(x))
  std::vector<double> bracket;       // x - L(x) beta(x)
  std::vector<double> psi_integral;  // int_lo^x G(beta) f psi_F
  double              ode_residual      = 0.0;  // sup |L' - rhs| with L' by central differences
  double              identity_residual = 0.0;  // sup |bracket + psi_integral / ((1 - F) G(beta))|
};

/// Multiplier of the seller-revenue constraints at the thresholded
/// extension of truthful bidding at r.
KktSolution kkt_multiplier(CompetitionCdf const &G, ValueDistribution const &d, double r, int grid_size = 1025);

CertificateReport kkt_report(KktSolution const &k);

/// Seller revenue b (1 - F_B(b)) on [bid(lo), bid(r)] is flat within 1e-6 and
/// not below the maximum of the whole curve.
CertificateReport seller_indifference_check(ShadingStrategy const &s, ValueDistribution const &d, double r);

/// Strategy with virtualized bid max(h, 0), bidding at least as high.
ShadingStrategy relaxation_improvement(ShadingStrategy const &s, ValueDistribution const &d,
                                       AuctionSpec const &spec);

/// Every certificate that applies to (spec, d, r).
std::vector<CertificateReport> certificate_suite(AuctionSpec const &spec, ValueDistribution const &d, double r,
                                                 int trials, std::uint64_t seed);

}  // namespace bidshade
