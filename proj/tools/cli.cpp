#include "cli.hpp"

#include "bidshade/bidspace.hpp"
#include "bidshade/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>

namespace bidshade::cli {

namespace fs = std::filesystem;

namespace {

struct Key
{
  char const *name;
  char const *help;
};

// Every key accepted in a config file; each is also a --flag (dashes or
// underscores).
constexpr Key kKeys[] = {
  {"command", "table | train | certify | curve"},
  {"auction", "lazy | eager | myerson | bsp"},
  {"K", "number of bidders, or a JSON list for table runs"},
  {"prior", "uniform | exponential | JSON prior, or a JSON list for table runs"},
  {"opponent", "opponents' prior (defaults to the strategic prior)"},
  {"opponent_reserve", "opponents' reserve (defaults to their monopoly price)"},
  {"bsp_variant", "boosted second price fit variant (1 or 2)"},
  {"strategic_reserve", "fixed reserve price for the strategic bidder"},
  {"strategy", "truthful | thresholded | closed_form | trained"},
  {"strategy_file", "strategy JSON file (overrides --strategy)"},
  {"n_samples", "Monte Carlo rounds per estimate"},
  {"seed", "random seed (required for table and train)"},
  {"r", "threshold value (defaults to the prior's monopoly price)"},
  {"trials", "random slacks per certificate"},
  {"out", "output directory"},
  {"batch_size", "optimizer batch size"},
  {"steps", "optimizer steps"},
  {"learning_rate", "optimizer learning rate"},
  {"decay", "learning rate decay factor"},
  {"decay_every", "steps between decays"},
  {"eta", "sigmoid sharpness of the smoothed objective"},
  {"family", "trainable family: mlp | affine | spline"},
  {"width", "hidden units of the mlp"},
  {"knots", "spline knots"},
  {"rule", "sgd | adam"},
  {"step_tolerance", "spline ascent stopping gain"},
  {"refit_every", "boosted second price line refresh interval"},
  {"checkpoint_every", "steps between checkpoint evaluations"},
  {"clip_final", "clip the returned strategy's virtualized bid"},
};

constexpr char const *kOptimKeys[] = {"batch_size",     "steps",       "learning_rate",    "decay",
                                      "decay_every",    "eta",         "family",           "width",
                                      "knots",          "rule",        "step_tolerance",   "refit_every",
                                      "checkpoint_every", "clip_final"};

// Command-line values are JSON when they parse as JSON, strings otherwise.
Json value_json(std::string const &s)
{
  Json j = Json::parse(s, nullptr, false);
  if (j.is_discarded() || j.is_string())
  {
    return s;
  }
  return j;
}

ValueDistribution prior_from(Json const &j)
{
  if (j.is_string())
  {
    std::string const name = j.get<std::string>();
    if (name == "uniform")
    {
      return ValueDistribution::uniform();
    }
    if (name == "exponential")
    {
      return ValueDistribution::exponential();
    }
    throw ConfigError("unknown prior '" + name + "'");
  }
  return distribution_from_json(j);
}

Json read_json_file(std::string const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError("cannot read " + path);
  }
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded())
  {
    throw ConfigError(path + " is not valid JSON");
  }
  return j;
}

std::string metadata(ExperimentConfig const &cfg)
{
  return Json{{"version", kVersion},
              {"config", cfg.resolved},
              {"truncation_tail_mass", ValueDistribution::kTailMass},
              {"eager_reserve_rule", "bid >= reserve clears"}}
    .dump();
}

fs::path output_dir(ExperimentConfig const &cfg)
{
  fs::path const dir(cfg.out);
  fs::create_directories(dir);
  return dir;
}

void write_json(fs::path const &path, Json const &j)
{
  std::ofstream os(path);
  if (!os)
  {
    throw std::runtime_error("cannot write " + path.string());
  }
  os << j.dump(2) << '\n';
}

AuctionSpec cell_spec(ExperimentConfig const &cfg, int K, ValueDistribution const &prior)
{
  AuctionSpec spec = cfg.spec;
  spec.K           = K;
  if (cfg.opponent_follows_prior)
  {
    spec.opponent = prior;
  }
  spec.validate();
  return spec;
}

}  // namespace

ExperimentConfig resolve_config(Json const &merged)
{
  std::set<std::string> known;
  for (auto const &k : kKeys)
  {
    known.insert(k.name);
  }
  for (auto const &[key, value] : merged.items())
  {
    if (!known.count(key))
    {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  ExperimentConfig cfg;
  try
  {
    cfg.command = merged.value("command", "");
    if (cfg.command != "table" && cfg.command != "train" && cfg.command != "certify" && cfg.command != "curve")
    {
      throw ConfigError("command must be one of table, train, certify, curve");
    }
    bool const table = cfg.command == "table";

    if (merged.contains("seed"))
    {
      cfg.seed = merged.at("seed").get<std::uint64_t>();
    }
    else if (table || cfg.command == "train")
    {
      throw ConfigError("--seed is required for " + cfg.command);
    }

    Json spec_json;
    if (merged.contains("auction"))
    {
      spec_json["auction"] = merged.at("auction");
    }
    for (char const *k : {"opponent_reserve", "bsp_variant"})
    {
      if (merged.contains(k))
      {
        spec_json[k] = merged.at(k);
      }
    }
    if (merged.contains("strategic_reserve"))
    {
      spec_json["strategic_reserve_override"] = merged.at("strategic_reserve");
    }
    if (merged.contains("opponent"))
    {
      cfg.opponent_follows_prior = false;
      spec_json["opponent"]      = to_json(prior_from(merged.at("opponent")));
    }
    cfg.spec = auction_spec_from_json(spec_json);

    Json const K = merged.value("K", table ? Json{2, 3, 4} : Json(2));
    if (K.is_array())
    {
      cfg.Ks = K.get<std::vector<int>>();
    }
    else
    {
      cfg.Ks = {K.get<int>()};
    }
    if (cfg.Ks.empty())
    {
      throw ConfigError("K list is empty");
    }
    for (int k : cfg.Ks)
    {
      if (k < 2)
      {
        throw ConfigError("K must be at least 2");
      }
    }
    cfg.spec.K = cfg.Ks.front();

    Json const P = merged.value("prior", table ? Json{"uniform", "exponential"} : Json("uniform"));
    if (P.is_array())
    {
      for (auto const &p : P)
      {
        cfg.priors.push_back(prior_from(p));
      }
    }
    else
    {
      cfg.priors.push_back(prior_from(P));
    }
    if (cfg.priors.empty())
    {
      throw ConfigError("prior list is empty");
    }
    if (cfg.opponent_follows_prior)
    {
      cfg.spec.opponent = cfg.prior();
    }

    cfg.strategy = merged.value("strategy", cfg.command == "table"
                                              ? (cfg.spec.format == Format::Myerson ? "closed_form" : "thresholded")
                                              : "truthful");
    if (merged.contains("strategy_file"))
    {
      cfg.strategy_file = merged.at("strategy_file").get<std::string>();
      if (!fs::exists(cfg.strategy_file))
      {
        throw ConfigError("strategy file " + cfg.strategy_file + " does not exist");
      }
      cfg.strategy = "file";
    }
    static std::set<std::string> const strategies{"truthful", "thresholded", "closed_form", "trained", "file"};
    if (!strategies.count(cfg.strategy))
    {
      throw ConfigError("unknown strategy '" + cfg.strategy + "'");
    }

    Json optim;
    for (char const *k : kOptimKeys)
    {
      if (merged.contains(k))
      {
        optim[k] = merged.at(k);
      }
    }
    if (cfg.seed)
    {
      optim["seed"] = *cfg.seed;
    }
    cfg.optim = optim_config_from_json(optim);

    cfg.n_samples = merged.value("n_samples", cfg.n_samples);
    if (cfg.n_samples < 1)
    {
      throw ConfigError("n_samples must be positive");
    }
    if (merged.contains("r"))
    {
      cfg.r = merged.at("r").get<double>();
    }
    cfg.trials = merged.value("trials", cfg.trials);
    if (cfg.trials < 1)
    {
      throw ConfigError("trials must be positive");
    }
    cfg.out = merged.value("out", cfg.out);
  }
  catch (ConfigError const &)
  {
    throw;
  }
  catch (std::exception const &e)
  {
    throw ConfigError(e.what());
  }

  Json priors = Json::array();
  for (auto const &p : cfg.priors)
  {
    priors.push_back(to_json(p));
  }
  cfg.resolved = {{"command", cfg.command},
                  {"auction", to_json(cfg.spec)},
                  {"opponent_follows_prior", cfg.opponent_follows_prior},
                  {"K", cfg.Ks},
                  {"prior", priors},
                  {"strategy", cfg.strategy},
                  {"strategy_file", cfg.strategy_file},
                  {"optim", to_json(cfg.optim)},
                  {"n_samples", cfg.n_samples},
                  {"seed", cfg.seed ? Json(*cfg.seed) : Json(nullptr)},
                  {"r", cfg.r ? Json(*cfg.r) : Json(nullptr)},
                  {"trials", cfg.trials},
                  {"out", cfg.out}};
  return cfg;
}

ShadingStrategy configured_strategy(ExperimentConfig const &cfg, AuctionSpec const &spec,
                                    ValueDistribution const &prior)
{
  if (cfg.strategy == "truthful")
  {
    return truthful();
  }
  if (cfg.strategy == "thresholded")
  {
    return thresholded_extension(truthful(), prior, cfg.r.value_or(monopoly_price(prior)));
  }
  if (cfg.strategy == "closed_form")
  {
    if (spec.opponent == ValueDistribution::uniform())
    {
      return myerson_uniform_closed_form(spec.K, std::nullopt, prior);
    }
    return myerson_gp_closed_form(spec.opponent, spec.K, prior);
  }
  if (cfg.strategy == "trained")
  {
    return optimize(spec, prior, cfg.optim).strategy;
  }
  Json const j = read_json_file(cfg.strategy_file);
  return strategy_from_json(j.contains("family") ? j : j.at("strategy"));
}

int run_table(ExperimentConfig const &cfg, std::ostream &log)
{
  ExperimentResult res;
  std::uint64_t    cell = 0;
  for (auto const &prior : cfg.priors)
  {
    for (int K : cfg.Ks)
    {
      AuctionSpec const   spec = cell_spec(cfg, K, prior);
      std::uint64_t const seed = *cfg.seed * 1000 + cell++;
      Baselines const     base = baselines(spec, prior, cfg.n_samples, seed);
      std::string const   auction = format_name(spec.format);
      res.rows.push_back({auction, K, prior.name(), "truthful", base.revenue_max_truthful, 0.0});
      res.rows.push_back({auction, K, prior.name(), "truthful_no_reserve", base.welfare_truthful,
                          uplift(base.welfare_truthful, base.revenue_max_truthful)});
      ShadingStrategy const s   = configured_strategy(cfg, spec, prior);
      UtilityEstimate const est = mc_utility(spec, s, prior, cfg.n_samples, seed);
      res.rows.push_back(
        {auction, K, prior.name(), cfg.strategy, est, uplift(est, base.revenue_max_truthful)});
      log << auction << " K=" << K << ' ' << prior.name() << ": truthful " << base.revenue_max_truthful.mean
          << ", no reserve " << base.welfare_truthful.mean << ", " << cfg.strategy << ' ' << est.mean << " +- "
          << est.std_error << '\n';
    }
  }
  std::ofstream os(output_dir(cfg) / "results.csv");
  write_results_csv(os, res, metadata(cfg));
  return kExitOk;
}

int run_train(ExperimentConfig const &cfg, std::ostream &log)
{
  AuctionSpec const spec   = cell_spec(cfg, cfg.Ks.front(), cfg.prior());
  OptimReport const report = optimize(spec, cfg.prior(), cfg.optim);
  fs::path const    dir    = output_dir(cfg);
  write_json(dir / "report.json", {{"metadata", Json::parse(metadata(cfg))}, {"version", kVersion},
                                   {"config", cfg.resolved}, {"report", to_json(report)}});
  write_json(dir / "strategy.json", to_json(report.strategy));
  std::ofstream trace(dir / "trace.csv");
  trace << "# " << metadata(cfg) << '\n';
  write_trace_csv(trace, report);
  log << "final utility " << report.final_utility << " (best step " << report.best_step << ", "
      << report.instability_steps.size() << " reserve jumps)\n";
  for (auto const &w : report.warnings)
  {
    log << "warning: " << w << '\n';
  }
  return kExitOk;
}

int run_certify(ExperimentConfig const &cfg, std::ostream &log)
{
  ValueDistribution const &prior = cfg.prior();
  double const             r     = cfg.r.value_or(monopoly_price(prior));
  Support const            sup   = prior.support();
  if (!(r > sup.lo && r < sup.hi))
  {
    throw ConfigError("r must lie inside the prior's support");
  }
  AuctionSpec const spec  = cell_spec(cfg, cfg.Ks.front(), prior);
  auto const        certs = certificate_suite(spec, prior, r, cfg.trials, cfg.seed.value_or(1));
  bool              pass  = true;
  Json              list  = Json::array();
  for (auto const &c : certs)
  {
    pass = pass && c.pass;
    list.push_back(to_json(c));
    log << (c.pass ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
  }
  write_json(output_dir(cfg) / "report.json",
             {{"version", kVersion}, {"config", cfg.resolved}, {"r", r}, {"pass", pass}, {"certificates", list}});
  return pass ? kExitOk : kExitFailure;
}

int run_curve(ExperimentConfig const &cfg, std::ostream &log)
{
  ValueDistribution const &prior = cfg.prior();
  AuctionSpec const        spec  = cell_spec(cfg, cfg.Ks.front(), prior);
  ShadingStrategy const    s     = configured_strategy(cfg, spec, prior);
  BidDistribution const    bd    = pushforward(prior, s, 512, DensityMode::Analytic);
  RevenueCurve const       curve = seller_revenue_curve(bd, 512);

  std::ofstream os(output_dir(cfg) / "curve.csv");
  os << "# " << metadata(cfg) << '\n' << "series,x,y\n" << std::setprecision(10);
  for (std::size_t i = 0; i < curve.reserve.size(); ++i)
  {
    os << "revenue," << curve.reserve[i] << ',' << curve.revenue[i] << '\n';
  }
  Support const sup = prior.truncated_support();
  int const     n   = 256;
  for (int i = 0; i <= n; ++i)
  {
    double const x = i == n ? sup.hi : sup.lo + (sup.hi - sup.lo) * i / n;
    os << "bid," << x << ',' << bid(s, x) << '\n';
  }
  for (int i = 0; i <= n; ++i)
  {
    double const x = i == n ? sup.hi : sup.lo + (sup.hi - sup.lo) * i / n;
    os << "virtualized_bid," << x << ',' << virtualized_bid(s, prior, x) << '\n';
  }
  log << "revenue curve peaks at reserve " << curve.argmax << " with revenue " << curve.max << '\n';
  return kExitOk;
}

int run(std::vector<std::string> const &args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Bid shading strategies: tables, training, certificates and curves"};
  app.set_help_flag("-h,--help");
  std::string                        config_path;
  std::map<std::string, std::string> raw;
  app.add_option("--config", config_path, "JSON config file; flags override its keys");
  for (auto const &k : kKeys)
  {
    std::string const name  = k.name;
    std::string       dash  = name;
    std::replace(dash.begin(), dash.end(), '_', '-');
    std::string const flags = name == "command" ? "command" : (dash == name ? "--" + name : "--" + dash + ",--" + name);
    app.add_option(flags, raw[name], k.help);
  }

  ExperimentConfig cfg;
  try
  {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    Json merged = config_path.empty() ? Json::object() : read_json_file(config_path);
    if (!merged.is_object())
    {
      throw ConfigError("config file must hold a JSON object");
    }
    for (auto const &k : kKeys)
    {
      if (app.get_option(k.name == std::string("command") ? "command" : std::string("--") + k.name)->count() > 0)
      {
        merged[k.name] = k.name == std::string("command") ? Json(raw[k.name]) : value_json(raw[k.name]);
      }
    }
    cfg = resolve_config(merged);
  }
  catch (CLI::CallForHelp const &)
  {
    out << app.help();
    return kExitOk;
  }
  catch (CLI::ParseError const &e)
  {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  catch (ConfigError const &e)
  {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try
  {
    if (cfg.command == "table")
    {
      return run_table(cfg, out);
    }
    if (cfg.command == "train")
    {
      return run_train(cfg, out);
    }
    if (cfg.command == "certify")
    {
      return run_certify(cfg, out);
    }
    return run_curve(cfg, out);
  }
  catch (ConfigError const &e)
  {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  catch (std::exception const &e)
  {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace bidshade::cli
