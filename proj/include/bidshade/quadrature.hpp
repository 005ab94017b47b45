#pragma once

#include <functional>
#include <span>
#include <vector>

namespace bidshade::quad {

using Integrand = std::function<double(double)>;

struct Rule
{
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, computed once per n and cached.
Rule const &gauss_legendre(int n);

/// Pairwise (tree) summation; the order of terms fixes the result bit-for-bit.
double pairwise_sum(std::span<double const> terms);

struct Options
{
  int panels = 256;  // total panel budget over [a, b]
  int order  = 8;    // nodes per panel
};

/// Composite Gauss-Legendre over [a, b]. Breakpoints inside (a, b) always
/// start a new panel so that kinks and jumps of the integrand sit on panel
/// boundaries.
double integrate(Integrand const &fn, double a, double b, std::span<double const> breakpoints = {},
                 Options const &opts = {});

/// Points in [a, b] where fn crosses any of `levels`, located by scanning
/// `grid` sign changes and bisecting to machine precision.
std::vector<double> crossings(Integrand const &fn, std::span<double const> levels, double a, double b,
                              int grid = 4096);

/// Root of a function with fn(lo) and fn(hi) of opposite signs (or zero).
double bisect(Integrand const &fn, double lo, double hi, int iterations = 200);

}  // namespace bidshade::quad
