#pragma once

#include <stdexcept>
#include <string>

namespace bidshade {

// Argument outside the domain where a quantity is defined (support, density
// zero, unsupported prior for a closed form).
class DomainError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

// A strategy that is required to be nondecreasing is not. Carries the value
// interval where the violation was found.
class MonotonicityError : public std::runtime_error
{
public:
  MonotonicityError(double lo, double hi)
    : std::runtime_error("strategy decreases on value interval [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]")
    , lo_(lo)
    , hi_(hi)
  {}

  double lo() const { return lo_; }
  double hi() const { return hi_; }

private:
  double lo_;
  double hi_;
};

class NumericError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Directional derivative requested where the reserve value is a critical
// point of the virtualized bid.
class SingularityError : public NumericError
{
public:
  using NumericError::NumericError;
};

class OptimizerError : public std::runtime_error
{
public:
  OptimizerError(std::string const &what, std::size_t step)
    : std::runtime_error(what + " at step " + std::to_string(step))
    , step_(step)
  {}

  std::size_t step() const { return step_; }

private:
  std::size_t step_;
};

// Slack function that produces an infeasible strategy (negative squared bid,
// bid above one) or violates the endpoint constraints.
class InfeasibleSlackError : public DomainError
{
public:
  using DomainError::DomainError;
};

}  // namespace bidshade
