#include "bidshade/lp.hpp"

#include "bidshade/errors.hpp"

#include <cmath>
#include <limits>

namespace bidshade::lp {

namespace {

constexpr double kEps = 1e-11;

// Tableau over y >= 0 for rows  T y <= rhs, with one slack per row and one
// artificial per row whose rhs is negative.
class Tableau
{
public:
  Tableau(std::vector<std::vector<double>> rows, std::vector<double> rhs)
  {
    m_ = rows.size();
    n_ = m_ ? rows.front().size() : 0;
    for (std::size_t i = 0; i < m_; ++i)
    {
      if (rhs[i] < 0.0)
      {
        art_.push_back(i);
      }
    }
    cols_ = n_ + m_ + art_.size();
    t_.assign(m_, std::vector<double>(cols_ + 1, 0.0));
    basis_.resize(m_);
    std::size_t a = 0;
    for (std::size_t i = 0; i < m_; ++i)
    {
      double const sign = rhs[i] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j)
      {
        t_[i][j] = sign * rows[i][j];
      }
      t_[i][n_ + i] = sign;
      t_[i][cols_]  = sign * rhs[i];
      if (rhs[i] < 0.0)
      {
        t_[i][n_ + m_ + a] = 1.0;
        basis_[i]          = n_ + m_ + a;
        ++a;
      }
      else
      {
        basis_[i] = n_ + i;
      }
    }
  }

  void phase_one()
  {
    if (art_.empty())
    {
      return;
    }
    std::vector<double> cost(cols_, 0.0);
    for (std::size_t k = 0; k < art_.size(); ++k)
    {
      cost[n_ + m_ + k] = -1.0;
    }
    run(cost, cols_);
    if (value(cost) < -1e-9)
    {
      throw DomainError("linear program is infeasible");
    }
    // Drive remaining artificials out of the basis.
    for (std::size_t i = 0; i < m_; ++i)
    {
      if (basis_[i] < n_ + m_)
      {
        continue;
      }
      for (std::size_t j = 0; j < n_ + m_; ++j)
      {
        if (std::abs(t_[i][j]) > kEps)
        {
          pivot(i, j);
          break;
        }
      }
    }
  }

  void phase_two(std::vector<double> const &c)
  {
    std::vector<double> cost(cols_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
    {
      cost[j] = c[j];
    }
    run(cost, n_ + m_);
  }

  std::vector<double> primal() const
  {
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
    {
      if (basis_[i] < n_)
      {
        y[basis_[i]] = t_[i][cols_];
      }
    }
    return y;
  }

private:
  double value(std::vector<double> const &cost) const
  {
    double v = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
    {
      v += cost[basis_[i]] * t_[i][cols_];
    }
    return v;
  }

  // Maximize cost.y using columns [0, allowed).
  void run(std::vector<double> const &cost, std::size_t allowed)
  {
    std::size_t const limit = 50000;
    for (std::size_t it = 0; it < limit; ++it)
    {
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < allowed; ++j)
      {
        double rc = cost[j];
        for (std::size_t i = 0; i < m_; ++i)
        {
          rc -= cost[basis_[i]] * t_[i][j];
        }
        if (rc > kEps)
        {
          enter = j;
          break;
        }
      }
      if (enter == cols_)
      {
        return;
      }
      std::size_t leave = m_;
      double      best  = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i)
      {
        if (t_[i][enter] > kEps)
        {
          double const ratio = t_[i][cols_] / t_[i][enter];
          if (ratio < best - kEps || (ratio <= best + kEps && leave < m_ && basis_[i] < basis_[leave]))
          {
            best  = ratio;
            leave = i;
          }
        }
      }
      if (leave == m_)
      {
        throw NumericError("linear program is unbounded");
      }
      pivot(leave, enter);
    }
    throw NumericError("simplex iteration limit reached");
  }

  void pivot(std::size_t r, std::size_t c)
  {
    double const p = t_[r][c];
    for (double &v : t_[r])
    {
      v /= p;
    }
    for (std::size_t i = 0; i < m_; ++i)
    {
      if (i == r || t_[i][c] == 0.0)
      {
        continue;
      }
      double const f = t_[i][c];
      for (std::size_t j = 0; j <= cols_; ++j)
      {
        t_[i][j] -= f * t_[r][j];
      }
    }
    basis_[r] = c;
  }

  std::size_t                      m_ = 0, n_ = 0, cols_ = 0;
  std::vector<std::size_t>         art_;
  std::vector<std::vector<double>> t_;
  std::vector<std::size_t>         basis_;
};

}  // namespace

Solution solve(Problem const &p)
{
  std::size_t const n = p.c.size();
  if (p.lo.size() != n || p.hi.size() != n || p.A.size() != p.b.size())
  {
    throw DomainError("linear program dimensions disagree");
  }
  // Shift x = lo + y and add the upper bounds as rows.
  std::vector<std::vector<double>> rows;
  std::vector<double>              rhs;
  for (std::size_t i = 0; i < p.A.size(); ++i)
  {
    if (p.A[i].size() != n)
    {
      throw DomainError("linear program row has the wrong length");
    }
    double r = p.b[i];
    for (std::size_t j = 0; j < n; ++j)
    {
      r -= p.A[i][j] * p.lo[j];
    }
    rows.push_back(p.A[i]);
    rhs.push_back(r);
  }
  for (std::size_t j = 0; j < n; ++j)
  {
    if (p.hi[j] < p.lo[j])
    {
      throw DomainError("linear program has an empty box");
    }
    std::vector<double> row(n, 0.0);
    row[j] = 1.0;
    rows.push_back(std::move(row));
    rhs.push_back(p.hi[j] - p.lo[j]);
  }
  Tableau t(std::move(rows), std::move(rhs));
  t.phase_one();
  t.phase_two(p.c);
  Solution s;
  s.x         = t.primal();
  s.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j)
  {
    s.x[j] += p.lo[j];
    s.objective += p.c[j] * s.x[j];
  }
  return s;
}

}  // namespace bidshade::lp
