#pragma once

#include "bidshade/auctions.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bidshade {

struct UtilityEstimate
{
  double        mean      = 0.0;
  double        std_error = 0.0;
  std::size_t   n         = 0;
  std::uint64_t seed      = 0;
};

/// Per-draw simulation of one auction round, `n` rounds split over a fixed
/// number of shards with sub-seeds seed * 2^20 + shard. Results do not
/// depend on the number of worker threads.
struct McOutcome
{
  UtilityEstimate utility;
  UtilityEstimate payment;
};

inline constexpr int kMcShards = 16;

/// Worker threads for Monte Carlo: BIDSHADE_THREADS if set, else the
/// hardware concurrency.
int worker_threads();

McOutcome simulate(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d, std::size_t n,
                   std::uint64_t seed);

UtilityEstimate mc_utility(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
                           std::size_t n, std::uint64_t seed);

UtilityEstimate mc_seller_payment(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
                                  std::size_t n, std::uint64_t seed);

struct LemmaCheck
{
  UtilityEstimate direct;
  double          integrated;
};

/// Simulated payment against the integrated form E[h(X) A(X) 1{cleared}].
LemmaCheck myerson_lemma_check(AuctionSpec const &spec, ShadingStrategy const &s, ValueDistribution const &d,
                               std::size_t n, std::uint64_t seed);

struct Baselines
{
  UtilityEstimate welfare_truthful;      // reserve 0
  UtilityEstimate revenue_max_truthful;  // monopoly reserve
};

/// Truthful utility in the lazy second price auction with and without the
/// monopoly reserve (for symmetric truthful bidders every format in scope
/// coincides with the latter).
Baselines baselines(AuctionSpec const &spec, ValueDistribution const &d, std::size_t n, std::uint64_t seed);

double uplift(UtilityEstimate const &strategic, UtilityEstimate const &baseline);

struct ResultRow
{
  std::string     auction;
  int             K;
  std::string     prior;
  std::string     strategy;
  UtilityEstimate estimate;
  double          uplift_pct;
};

struct ExperimentResult
{
  std::vector<ResultRow> rows;
};

/// CSV with a leading '#' metadata line followed by the fixed header
/// auction,K,prior,strategy,utility_mean,utility_stderr,uplift_pct,n,seed.
void write_results_csv(std::ostream &os, ExperimentResult const &result, std::string const &metadata);

}  // namespace bidshade
