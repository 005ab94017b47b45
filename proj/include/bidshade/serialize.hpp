#pragma once

#include "bidshade/auctions.hpp"
#include "bidshade/certify.hpp"
#include "bidshade/evaluate.hpp"
#include "bidshade/optimize.hpp"

#include <json.hpp>

#include <string>

namespace bidshade {

inline constexpr char kVersion[] = "0.1.0";

using Json = nlohmann::json;

/// {"kind": "uniform" | "exponential" | "gpd", "params": [...]}
Json              to_json(ValueDistribution const &d);
ValueDistribution distribution_from_json(Json const &j);

/// {"family": "...", "params": {...}}; nested strategies (thresholded,
/// patched) serialize their base recursively.
Json            to_json(ShadingStrategy const &s);
ShadingStrategy strategy_from_json(Json const &j);

Json        to_json(AuctionSpec const &spec);
/// Missing keys keep the values of `base`.
AuctionSpec auction_spec_from_json(Json const &j, AuctionSpec base = {});

Json        to_json(OptimConfig const &c);
OptimConfig optim_config_from_json(Json const &j, OptimConfig base = {});

Json to_json(OptimReport const &r);
Json to_json(UtilityEstimate const &e);
Json to_json(CertificateReport const &r);

}  // namespace bidshade
