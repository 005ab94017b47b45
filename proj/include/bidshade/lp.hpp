#pragma once

#include <vector>

namespace bidshade::lp {

/// maximize c.x subject to A x <= b and lo <= x <= hi (dense, small).
struct Problem
{
  std::vector<double>              c;
  std::vector<std::vector<double>> A;
  std::vector<double>              b;
  std::vector<double>              lo;
  std::vector<double>              hi;
};

struct Solution
{
  std::vector<double> x;
  double              objective;
};

/// Two-phase tableau simplex with Bland's rule. Throws DomainError when the
/// problem is infeasible and NumericError when it is unbounded.
Solution solve(Problem const &p);

}  // namespace bidshade::lp
