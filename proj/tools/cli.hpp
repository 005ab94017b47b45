#pragma once

#include "bidshade/serialize.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bidshade::cli {

inline constexpr int kExitOk      = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig  = 2;

/// Thrown for anything wrong with the configuration; maps to exit code 2.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig
{
  std::string                    command;
  Json                           resolved;  // every key after defaults and overrides
  AuctionSpec                    spec;
  std::vector<int>               Ks;
  std::vector<ValueDistribution> priors;  // table runs every listed prior
  bool                           opponent_follows_prior = true;
  std::string                    strategy;  // truthful | thresholded | closed_form | trained | file
  std::string                    strategy_file;
  OptimConfig                    optim;
  std::size_t                    n_samples = 1000000;
  std::optional<std::uint64_t>   seed;
  std::optional<double>          r;
  int                            trials = 100;
  std::string                    out    = ".";

  ValueDistribution const &prior() const { return priors.front(); }
};

/// Merges the optional config file with command-line overrides and
/// validates the result.
ExperimentConfig resolve_config(Json const &merged);

/// Strategy named by the config for one (spec, prior) cell.
ShadingStrategy configured_strategy(ExperimentConfig const &cfg, AuctionSpec const &spec,
                                    ValueDistribution const &prior);

int run_table(ExperimentConfig const &cfg, std::ostream &log);
int run_train(ExperimentConfig const &cfg, std::ostream &log);
int run_certify(ExperimentConfig const &cfg, std::ostream &log);
int run_curve(ExperimentConfig const &cfg, std::ostream &log);

/// Entry point; args excludes the program name.
int run(std::vector<std::string> const &args, std::ostream &out, std::ostream &err);

}  // namespace bidshade::cli
