#include "ratemix/diagnostics.hpp"
#include "ratemix/io.hpp"
#include "ratemix/model.hpp"
#include "ratemix/simulate.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace fs = std::filesystem;
using namespace ratemix;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chains;
  std::string out = ".";
  bool resume = false;
  std::size_t halt_after = 0;  // testing aid: stop fit after this many checkpoints
};

class Timer {
 public:
  void mark(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    times_[name] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  std::string json_text() const {
    json j = json::object();
    for (const auto& [k, v] : times_) j[k] = v;
    return j.dump(2) + '\n';
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::map<std::string, double> times_;
};

io::Config load_config(const Options& opt, const std::string& seed_key) {
  io::Config cfg = fs::path(opt.config).extension() == ".json" ? io::config_from_manifest(opt.config)
                                                                : io::Config::load(opt.config);
  if (opt.seed) cfg.set(seed_key, std::to_string(*opt.seed));
  if (opt.chains) cfg.set("fit.chains", std::to_string(*opt.chains));
  return cfg;
}

std::string run_hash_of(const std::string& manifest) { return json::parse(manifest).at("run_hash").get<std::string>(); }

std::string pad_id(const char* prefix, std::size_t k, std::size_t count) {
  const int width = static_cast<int>(std::to_string(count).size());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, k + 1);
  return buf;
}

std::vector<std::size_t> site_positions(const std::vector<std::string>& wanted, const std::vector<std::string>& ids,
                                        const std::string& what) {
  std::vector<std::size_t> out;
  for (const auto& w : wanted) {
    const auto it = std::find(ids.begin(), ids.end(), w);
    if (it == ids.end()) throw ValidationError(what + ": unknown site_id '" + w + "'");
    out.push_back(static_cast<std::size_t>(it - ids.begin()));
  }
  return out;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Options& opt) {
  Timer timer;
  const io::Config cfg = load_config(opt, "simulate.seed");
  const ScenarioSpec spec = io::scenario_from_config(cfg);
  const SimulatedDataset ds = simulate_dataset(spec);
  timer.mark("simulate");

  const fs::path out = opt.out;
  io::SiteTable sites;
  for (std::size_t j = 0; j < spec.d; ++j) sites.ids.push_back(pad_id("s", j, spec.d));
  sites.coords = ds.design.coords();
  sites.covariates = ds.covariates;
  sites.covariate_names = ds.covariate_names;

  io::LongData data;
  data.site_ids = sites.ids;
  for (std::size_t i = 0; i < spec.n; ++i) data.time_ids.push_back(pad_id("t", i, spec.n));
  data.y = ds.y;
  data.censor = ds.thresholds;

  io::write_sites(out / "sites.csv", sites);
  io::write_long_data(out / "data.csv", data);

  json truth;
  truth["names"] = ds.model.hyperparam_names();
  truth["values"] = natural_vector(spec.hyper, false);
  truth["xi"] = 1.0 / spec.hyper.beta2;
  std::vector<std::string> held;
  for (auto j : ds.predict_sites) held.push_back(sites.ids[j]);
  truth["predict_sites"] = held;
  json thr = json::object();
  for (std::size_t j = 0; j < spec.d; ++j)
    if (std::isfinite(ds.site_thresholds[j])) thr[sites.ids[j]] = ds.site_thresholds[j];
  truth["site_thresholds"] = thr;
  io::write_file(out / "truth.json", truth.dump(2) + '\n');

  io::write_file(out / "manifest.json", io::manifest_json("simulate", cfg, {}));
  timer.mark("write");
  io::write_file(out / "timings.json", timer.json_text());
  std::cerr << "simulate: " << spec.d << " sites x " << spec.n << " replicates, " << ds.predict_sites.size()
            << " held out -> " << out.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- fit

struct FitInputs {
  io::SiteTable sites;
  io::LongData data;
  ExceedanceData exceed;
  SpatialModel model;
};

FitInputs load_fit_inputs(const io::Config& cfg, const ModelVariant& variant) {
  FitInputs in;
  in.sites = io::read_sites(cfg.get("fit.sites"));
  in.data = io::read_long_data(cfg.get("fit.data"), in.sites);

  std::vector<std::size_t> held = site_positions(io::split_list(cfg.get_or("fit.holdout", "")), in.sites.ids,
                                                 "config key 'fit.holdout'");
  if (in.data.censor) {
    for (Eigen::Index j = 0; j < in.data.y.cols(); ++j)
      if ((in.data.censor->col(j).array() == kInf).all()) held.push_back(static_cast<std::size_t>(j));
  }
  std::sort(held.begin(), held.end());
  held.erase(std::unique(held.begin(), held.end()), held.end());

  Matrix u;
  const std::string cq = cfg.get_or("fit.censor_quantile", "data");
  if (cq == "data") {
    u = io::thresholds_from_censor(in.data);
  } else {
    u = site_thresholds(in.data.y, io::parse_double(cq, "config key 'fit.censor_quantile'"), held);
  }
  for (auto j : held) u.col(static_cast<Eigen::Index>(j)).setConstant(kInf);
  in.exceed = io::to_exceedance(in.data, u);

  std::vector<std::string> cov_names = io::split_list(cfg.get_or("fit.covariates", ""));
  if (!cfg.has("fit.covariates")) cov_names = in.sites.covariate_names;
  Matrix cov(in.sites.covariates.rows(), static_cast<Eigen::Index>(cov_names.size()));
  for (std::size_t k = 0; k < cov_names.size(); ++k) {
    const auto it = std::find(in.sites.covariate_names.begin(), in.sites.covariate_names.end(), cov_names[k]);
    if (it == in.sites.covariate_names.end())
      throw ValidationError("config key 'fit.covariates': unknown covariate '" + cov_names[k] + "'");
    cov.col(static_cast<Eigen::Index>(k)) =
        in.sites.covariates.col(static_cast<Eigen::Index>(it - in.sites.covariate_names.begin()));
  }
  std::vector<std::size_t> training;
  for (std::size_t j = 0; j < in.sites.ids.size(); ++j)
    if (!std::binary_search(held.begin(), held.end(), j)) training.push_back(j);
  in.model = build_model(variant, SpatialDesign(in.sites.coords), cov, cov_names,
                         cfg.get_bool_or("fit.standardize", true), training);
  return in;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_cells(const std::string& text, const ExceedanceData& data) {
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (const auto& item : io::split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError("config key 'fit.trace_cells': expected row:col, got '" + item + "'");
    const double r = io::parse_double(item.substr(0, colon), "config key 'fit.trace_cells'");
    const double c = io::parse_double(item.substr(colon + 1), "config key 'fit.trace_cells'");
    if (r < 1 || c < 1 || r > static_cast<double>(data.rows()) || c > static_cast<double>(data.cols()) ||
        r != std::floor(r) || c != std::floor(c))
      throw ValidationError("config key 'fit.trace_cells': cell '" + item + "' out of range (1-based)");
    cells.emplace_back(static_cast<std::size_t>(r) - 1, static_cast<std::size_t>(c) - 1);
  }
  return cells;
}

Exec exec_from(const io::Config& cfg, const std::string& key) {
  const std::string e = cfg.get_or(key, "parallel");
  if (e == "parallel") return Exec::parallel;
  if (e == "serial") return Exec::serial;
  throw ValidationError("config key '" + key + "': expected parallel or serial, got '" + e + "'");
}

std::vector<ParamSummary> fit_summary(const FitResult& fit) {
  std::vector<const ChainOutput*> ptrs;
  for (const auto& c : fit.chains) ptrs.push_back(&c);
  const std::size_t burnin = fit.chains.front().burnin;
  const auto all = posterior_summaries(ptrs, burnin);
  std::vector<ParamSummary> rows;
  const auto xi = std::find_if(all.begin(), all.end(), [](const ParamSummary& s) { return s.name == "xi"; });
  for (const auto& s : all) {
    if (s.name == "xi") continue;
    if (s.name == "beta2" || s.name == "beta2_0") rows.push_back(*xi);
    else rows.push_back(s);
  }
  const auto& cells = fit.chains.front().traced_cells;
  for (std::size_t q = 0; q < cells.size(); ++q) {
    std::vector<std::vector<double>> per_chain;
    for (const auto& ch : fit.chains) {
      std::vector<double> v;
      for (std::size_t t = 0; t < ch.thinned_iters.size(); ++t)
        if (ch.thinned_iters[t] >= burnin) v.push_back(std::exp(ch.latent_trace[t * cells.size() + q]));
      per_chain.push_back(std::move(v));
    }
    rows.push_back(summarize("lambda_" + std::to_string(cells[q].first + 1) + "_" + std::to_string(cells[q].second + 1),
                             per_chain));
  }
  return rows;
}

int cmd_fit(const Options& opt) {
  Timer timer;
  const io::Config cfg = load_config(opt, "sampler.seed");
  FitSpec spec;
  spec.variant = ModelVariant::parse(cfg.get_or("fit.variant", "D1"));
  spec.priors = io::priors_from_config(cfg);
  spec.sampler = io::sampler_from_config(cfg);
  spec.chains = cfg.get_size_or("fit.chains", 2);
  spec.init_jitter = cfg.get_double_or("fit.init_jitter", spec.init_jitter);
  spec.exec = exec_from(cfg, "fit.exec");
  if (spec.chains == 0) throw ValidationError("config key 'fit.chains': need at least one chain");

  FitInputs in = load_fit_inputs(cfg, spec.variant);
  spec.sampler.traced_cells = parse_cells(cfg.get_or("fit.trace_cells", ""), in.exceed);
  spec.sampler.validate();
  timer.mark("load");

  const fs::path out = opt.out;
  const std::string manifest = io::manifest_json("fit", cfg, {{"sites", cfg.get("fit.sites")}, {"data", cfg.get("fit.data")}});
  const std::string run_hash = run_hash_of(manifest);
  io::write_file(out / "manifest.json", manifest);

  const SpatialPosteriorTarget target(in.exceed, in.model, spec.priors, spec.exec);
  FitResult res;
  res.variant = spec.variant;
  res.names = target.hyper_names();
  res.predict_sites = prediction_sites(in.exceed);
  res.site_ids = in.sites.ids;
  res.time_ids = in.data.time_ids;

  std::size_t checkpoints_written = 0;
  for (std::size_t c = 0; c < spec.chains; ++c) {
    const fs::path ckpt = out / ("checkpoint_chain" + std::to_string(c) + ".cbor");
    const fs::path done = out / ("chain" + std::to_string(c) + ".cbor");
    if (opt.resume && fs::exists(done)) {
      res.chains.push_back(io::decode_checkpoint(io::read_file(done), run_hash).second);
      std::cerr << "chain " << c << ": already complete\n";
      continue;
    }
    std::optional<std::pair<ChainSnapshot, ChainOutput>> resume;
    if (opt.resume && fs::exists(ckpt)) {
      resume = io::decode_checkpoint(io::read_file(ckpt), run_hash);
      std::cerr << "chain " << c << ": resuming at iteration " << resume->first.next_iter << '\n';
    }
    bool halted = false;
    RunHooks hooks;
    hooks.progress = [c](const Progress& p) {
      std::cerr << "chain " << c << " iter " << p.iter << '/' << p.n_iter << " [" << phase_name(p.phase)
                << "] rw " << p.rw_rate << " mala " << p.mala_rate << " logpost " << p.logpost << '\n';
    };
    hooks.checkpoint = [&](const ChainSnapshot& snap, const ChainOutput& partial) {
      io::write_file(ckpt, io::encode_checkpoint(snap, partial, run_hash));
      ++checkpoints_written;
      if (opt.halt_after > 0 && checkpoints_written >= opt.halt_after) {
        halted = true;
        return false;
      }
      return true;
    };
    ChainOutput chain = fit_chain(spec, target, in.exceed, in.model, c, hooks, resume ? &*resume : nullptr);
    if (halted) {
      std::cerr << "fit: halted after checkpoint at iteration " << chain.iterations_done() << '\n';
      return kExitOk;
    }
    io::write_file(done, io::encode_checkpoint(chain.final_state, chain, run_hash));
    res.chains.push_back(std::move(chain));
    timer.mark("chain" + std::to_string(c));
  }

  io::write_file(out / "fit.cbor", io::encode_fit(res));
  io::write_file(out / "trace.csv", io::trace_csv(res));
  io::write_file(out / "latent_trace.csv", io::latent_trace_csv(res));
  io::write_file(out / "history.csv", io::history_csv(res));
  io::write_file(out / "summary.json", io::summary_json(res, fit_summary(res)));
  for (std::size_t c = 0; c < spec.chains; ++c) {
    fs::remove(out / ("checkpoint_chain" + std::to_string(c) + ".cbor"));
    fs::remove(out / ("chain" + std::to_string(c) + ".cbor"));
  }
  timer.mark("write");
  io::write_file(out / "timings.json", timer.json_text());
  return kExitOk;
}

// ---------------------------------------------------------------- predict

int cmd_predict(const Options& opt) {
  Timer timer;
  const io::Config cfg = load_config(opt, "predict.seed");
  const std::string fit_path = cfg.get("predict.fit");
  const FitResult res = io::decode_fit(io::read_file(fit_path));
  const std::uint64_t seed = cfg.has("predict.seed") ? cfg.get_u64("predict.seed") : 1;
  if (res.predict_sites.empty()) throw ValidationError("predict: the fit has no prediction sites (u = inf)");

  io::PredictiveTable table;
  table.time_ids = res.time_ids;
  for (std::size_t k = 0; k < res.predict_sites.size(); ++k) {
    table.site_ids.push_back(res.site_ids.at(res.predict_sites[k]));
    table.draws.push_back(pooled_predictive(res, k, seed));
  }
  timer.mark("predict");
  const fs::path out = opt.out;
  io::write_file(out / "predictive.csv", io::predictive_csv(table));
  io::write_file(out / "manifest.json", io::manifest_json("predict", cfg, {{"fit", fit_path}}));
  timer.mark("write");
  io::write_file(out / "timings.json", timer.json_text());
  return kExitOk;
}

// ---------------------------------------------------------------- score

int cmd_score(const Options& opt) {
  Timer timer;
  const io::Config cfg = load_config(opt, "score.seed");
  const io::SiteTable sites = io::read_sites(cfg.get("score.sites"));
  const io::LongData data = io::read_long_data(cfg.get("score.data"), sites);
  const double wq = cfg.get_double_or("score.weight_quantile", 0.85);
  const double sigma = cfg.get_double_or("score.sigma", 5.0);
  if (!(wq > 0.0 && wq < 1.0)) throw ValidationError("config key 'score.weight_quantile' must lie in (0, 1)");

  std::vector<std::pair<std::string, fs::path>> inputs{{"sites", cfg.get("score.sites")},
                                                        {"data", cfg.get("score.data")}};
  std::vector<std::string> labels;
  std::vector<io::PredictiveTable> tables;
  for (const auto& item : io::split_list(cfg.get("score.predictive"))) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config key 'score.predictive': expected label=path, got '" + item + "'");
    labels.push_back(item.substr(0, eq));
    inputs.emplace_back("predictive_" + labels.back(), item.substr(eq + 1));
    tables.push_back(io::read_predictive(item.substr(eq + 1)));
  }
  if (tables.empty()) throw ValidationError("config key 'score.predictive': no forecasts listed");

  const auto& ref = tables.front();
  const auto site_pos = site_positions(ref.site_ids, sites.ids, "score");
  std::vector<Eigen::Index> time_pos;
  for (const auto& t : ref.time_ids) {
    const auto it = std::find(data.time_ids.begin(), data.time_ids.end(), t);
    if (it == data.time_ids.end()) throw ValidationError("score: unknown time_id '" + t + "' in forecasts");
    time_pos.push_back(static_cast<Eigen::Index>(it - data.time_ids.begin()));
  }
  Holdout holdout;
  holdout.y.resize(static_cast<Eigen::Index>(time_pos.size()), static_cast<Eigen::Index>(site_pos.size()));
  for (std::size_t k = 0; k < site_pos.size(); ++k) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < time_pos.size(); ++i) {
      const double v = data.y(time_pos[i], static_cast<Eigen::Index>(site_pos[k]));
      holdout.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
      if (std::isfinite(v)) vals.push_back(v);
    }
    if (vals.empty()) throw ValidationError("score: held-out site '" + ref.site_ids[k] + "' has no observations");
    holdout.thresholds.push_back(empirical_quantile(std::move(vals), wq));
  }

  std::vector<std::vector<Matrix>> draws;
  for (std::size_t v = 0; v < tables.size(); ++v) {
    if (tables[v].site_ids != ref.site_ids || tables[v].time_ids != ref.time_ids)
      throw ValidationError("score: forecast '" + labels[v] + "' covers different sites or times");
    draws.push_back(tables[v].draws);
  }
  const auto reports = compare(labels, draws, holdout, sigma);
  timer.mark("score");
  const fs::path out = opt.out;
  io::write_file(out / "score.csv", io::scores_csv(reports));
  io::write_file(out / "manifest.json", io::manifest_json("score", cfg, inputs));
  timer.mark("write");
  io::write_file(out / "timings.json", timer.json_text());
  return kExitOk;
}

// ---------------------------------------------------------------- chi

int cmd_chi(const Options& opt) {
  Timer timer;
  const io::Config cfg = load_config(opt, "chi.seed");
  ScenarioSpec spec;
  spec.hyper.alpha_coefs = {cfg.get_double_or("chi.alpha0", 1.0)};
  spec.hyper.beta1 = cfg.get_double_or("chi.beta1", 5.0);
  spec.hyper.beta2 = cfg.get_double_or("chi.beta2", 2.5);
  spec.hyper.rho = cfg.get_double_or("chi.rho", 1.0);
  const std::string cop = cfg.get_or("chi.copula", "gaussian");
  if (cop == "gaussian") spec.copula = CopulaKind::gaussian;
  else if (cop == "student_t") spec.copula = CopulaKind::student_t;
  else throw ValidationError("config key 'chi.copula': expected gaussian or student_t, got '" + cop + "'");
  spec.nu = cfg.get_double_or("chi.nu", kInf);
  spec.seed = cfg.has("chi.seed") ? cfg.get_u64("chi.seed") : 1;
  const double distance = cfg.get_double_or("chi.distance", 0.5);
  const std::size_t n_mc = cfg.get_size_or("chi.n_mc", 1000000);
  std::vector<double> grid;
  for (const auto& s : io::split_list(cfg.get_or("chi.u_grid", "0.8,0.85,0.9,0.95,0.97,0.98,0.99,0.995")))
    grid.push_back(io::parse_double(s, "config key 'chi.u_grid'"));
  const ChiCurve curve = chi_u_curve(spec, distance, grid, n_mc, exec_from(cfg, "chi.exec"));
  for (const auto& w : curve.warnings) std::cerr << "chi: " << w << '\n';
  timer.mark("chi");
  const fs::path out = opt.out;
  io::write_file(out / "chi.csv", io::chi_csv(curve));
  io::write_file(out / "manifest.json", io::manifest_json("chi", cfg, {}));
  timer.mark("write");
  io::write_file(out / "timings.json", timer.json_text());
  return kExitOk;
}

// ---------------------------------------------------------------- extract-events

int cmd_events(const Options& opt) {
  Timer timer;
  const io::Config cfg = load_config(opt, "events.seed");
  const io::SiteTable sites = io::read_sites(cfg.get("events.sites"));
  const io::LongData data = io::read_long_data(cfg.get("events.data"), sites);
  const io::EventExtraction ex = io::extract_events(data.y, cfg.get_double_or("events.quantile", 0.85));
  const fs::path out = opt.out;
  io::write_file(out / "events.csv", io::events_csv(ex, data.time_ids));
  json s{{"threshold", ex.threshold},
         {"days", ex.days},
         {"events", ex.events.size()},
         {"missing_cells", ex.missing_cells}};
  io::write_file(out / "events.json", s.dump(2) + '\n');
  io::write_file(out / "manifest.json", io::manifest_json("extract-events", cfg,
                                                          {{"sites", cfg.get("events.sites")},
                                                           {"data", cfg.get("events.data")}}));
  timer.mark("extract");
  io::write_file(out / "timings.json", timer.json_text());
  std::cerr << "extract-events: " << ex.events.size() << " of " << ex.days << " days above "
            << ex.threshold << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial rate-mixture models for threshold exceedances"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::version_string());

  Options opt;
  std::uint64_t seed = 0;
  std::size_t chains = 0;
  auto add_common = [&](CLI::App* sub, bool is_fit) {
    sub->add_option("--config", opt.config, "INI config, or a manifest.json to rerun")->required();
    sub->add_option("--seed", seed, "Override the seed in the config");
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    if (is_fit) {
      sub->add_option("--chains", chains, "Number of chains");
      sub->add_flag("--resume", opt.resume, "Continue from checkpoints in --out");
      sub->add_option("--halt-after", opt.halt_after, "Stop after this many checkpoints")->group("");
    }
  };

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"simulate", "Simulate a dataset from the spatial model", cmd_simulate},
      {"fit", "Run MCMC chains on a dataset", cmd_fit},
      {"predict", "Posterior predictive draws at held-out sites", cmd_predict},
      {"score", "CRPS and twCRPS of predictive draws", cmd_score},
      {"chi", "Monte Carlo chi(u) curve", cmd_chi},
      {"extract-events", "Days whose spatial mean exceeds a quantile", cmd_events},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, std::string(c.name) == "fit");
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->get_option_no_throw("--chains") && sub->count("--chains")) opt.chains = chains;
    try {
      fs::create_directories(opt.out);
      return cmd->run(opt);
    } catch (const ValidationError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitValidation;
    } catch (const NumericError& e) {
      std::cerr << "numeric failure: " << e.what() << '\n';
      return kExitNumeric;
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitValidation;
    } catch (const std::domain_error& e) {
      std::cerr << "numeric failure: " << e.what() << '\n';
      return kExitNumeric;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitValidation;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return kExitValidation;
}
