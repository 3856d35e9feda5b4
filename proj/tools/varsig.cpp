#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "plots.hpp"
#include "varsig/baselines/tv_map.hpp"
#include "varsig/core/dataset.hpp"
#include "varsig/core/error.hpp"
#include "varsig/core/tensor_file.hpp"
#include "varsig/model/artifact.hpp"
#include "varsig/physics/registry.hpp"
#include "varsig/physics/streaking.hpp"
#include "varsig/train/evaluate.hpp"
#include "varsig/train/synth.hpp"
#include "varsig/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace varsig;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::missing_file: return 3;
    case ErrorKind::system_mismatch: return 4;
    case ErrorKind::format: return 5;
    case ErrorKind::config: return 6;
    case ErrorKind::numerical: return 7;
    case ErrorKind::shape: return 8;
    case ErrorKind::domain: return 9;
    case ErrorKind::state: return 10;
    case ErrorKind::unsupported_model: return 11;
  }
  return 1;
}

int report_error(const std::string& code, const std::string& message, int status) {
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += c == '\n' ? ' ' : c;
  }
  std::fprintf(stderr, "error: code=%s message=\"%s\"\n", code.c_str(), escaped.c_str());
  return status;
}

// Values from --config. Each command overlays its flags on top.
struct RunConfig {
  std::optional<SystemId> system;
  std::optional<std::uint64_t> seed;
  json paths = json::object();
  json physics;
  json model = json::object();
  json tv = json::object();
  json synth = json::object();
  json eval = json::object();
};

RunConfig read_run_config(const std::string& path) {
  RunConfig rc;
  if (path.empty()) return rc;
  const json j = read_json_file(path);
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "system") {
      rc.system = system_from_string(value.get<std::string>());
    } else if (key == "seed") {
      rc.seed = value.get<std::uint64_t>();
    } else if (key == "paths") {
      rc.paths = value;
    } else if (key == "physics") {
      rc.physics = value;
    } else if (key == "model") {
      rc.model = value;
    } else if (key == "tv") {
      rc.tv = value;
    } else if (key == "synth") {
      rc.synth = value;
    } else if (key == "eval") {
      rc.eval = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return rc;
}

void write_effective(const fs::path& dir, json eff) {
  eff["config_hash"] = config_hash_hex(eff);
  fs::create_directories(dir);
  write_json_file(dir / "effective_config.json", eff);
}

std::string resolve_path(const CLI::Option* flag, const std::string& value, const json& paths,
                         const char* key, const char* what) {
  if (flag->count() > 0) return value;
  if (paths.contains(key)) return paths[key].get<std::string>();
  throw ConfigError(std::string("no ") + what + " given (flag or paths." + key + " in the config)");
}

template <class T>
T pick(const CLI::Option* flag, const T& flag_value, const json& section, const char* key, const T& fallback) {
  if (flag->count() > 0) return flag_value;
  if (section.contains(key)) return section[key].get<T>();
  return fallback;
}

SystemId pick_system(const CLI::Option* flag, const std::string& value, const RunConfig& rc,
                     std::optional<SystemId> fallback = std::nullopt) {
  if (flag->count() > 0) return system_from_string(value);
  if (rc.system) return *rc.system;
  if (fallback) return *fallback;
  throw ConfigError("no system given (--system or \"system\" in the config)");
}

json physics_for(SystemId system, const RunConfig& rc) {
  if (rc.physics.is_null()) return default_physics(system);
  return make_forward_model(system, rc.physics)->config_json();
}

Dataset load_split(const fs::path& path, std::optional<SystemId> system, const std::string& split) {
  if (fs::exists(path / "manifest.json") || !system) return read_dataset(path);
  return read_dataset(path, *system, split);
}

void print_line(const std::string& s) { std::fprintf(stdout, "%s\n", s.c_str()); }

struct Common {
  std::string config;
  bool plots = false;
};

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string system, out, split = "train", source;
  std::size_t n = 2000;
  std::uint64_t seed = 0;
  double noise = 0.0;
  CLI::Option *o_system, *o_out, *o_split, *o_source, *o_n, *o_seed, *o_noise;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* c = app.add_subcommand("synth", "Synthesize a dataset split");
  a.o_system = c->add_option("--system", a.system, "streaking | video_cs | hologram | generic");
  a.o_n = c->add_option("--n", a.n, "Number of records")->capture_default_str();
  a.o_seed = c->add_option("--seed", a.seed, "Base seed")->capture_default_str();
  a.o_out = c->add_option("--out", a.out, "Dataset root; the split goes to <out>/<system>/<split>");
  a.o_split = c->add_option("--split", a.split, "Split name")->capture_default_str();
  a.o_noise = c->add_option("--noise", a.noise, "Additive Gaussian noise sigma on g")->capture_default_str();
  a.o_source = c->add_option("--source", a.source,
                             "Image directory (video_cs) or MNIST IDX path (hologram); default synthetic");
}

int run_synth(const SynthArgs& a, const Common& common) {
  const RunConfig rc = read_run_config(common.config);
  const SystemId system = pick_system(a.o_system, a.system, rc);
  const fs::path out = resolve_path(a.o_out, a.out, rc.paths, "data_root", "output directory");
  SynthOptions opt;
  opt.n = pick(a.o_n, a.n, rc.synth, "n", a.n);
  opt.seed = a.o_seed->count() ? a.seed : rc.seed.value_or(a.seed);
  opt.split = pick(a.o_split, a.split, rc.synth, "split", a.split);
  opt.noise_sigma = pick(a.o_noise, a.noise, rc.synth, "noise_sigma", a.noise);
  const std::string source = pick(a.o_source, a.source, rc.synth, "source", a.source);
  std::optional<fs::path> src;
  if (!source.empty()) src = source;

  const Dataset ds = synth_dataset(system, opt, physics_for(system, rc), src);
  const fs::path dir = write_dataset(out, ds);
  json eff = {{"command", "synth"}, {"system", to_string(system)}, {"seed", opt.seed}, {"n", opt.n},
              {"split", opt.split}, {"noise_sigma", opt.noise_sigma}, {"physics", ds.physics},
              {"extra", ds.extra}, {"dataset_hash", ds.config_hash()}};
  write_effective(dir, eff);
  if (common.plots) {
    const auto& r = ds.records.front();
    plots::signal(dir / "plots" / "f_000000.png", system, r.f.data(), r.f.shape(),
                  ds.physics.value("n_xuv", std::size_t{200}));
    plots::signal(dir / "plots" / "g_000000.png", system, r.g.data(), r.g.shape());
  }
  print_line(dir.string());
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string system, method = "variational", data, out;
  std::size_t epochs = 0, batch_size = 0, latent_dim = 0, recurrences = 0;
  std::uint64_t seed = 0;
  double lr = 0, gamma = 0, alpha = 0, beta = 0;
  bool deterministic = false, resume = false;
  CLI::Option *o_system, *o_method, *o_data, *o_out, *o_epochs, *o_batch, *o_latent, *o_rec, *o_seed,
      *o_lr, *o_gamma, *o_alpha, *o_beta;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "Train a retrieval network");
  const ModelConfig d;
  a.o_system = c->add_option("--system", a.system, "System; must match the dataset");
  a.o_method = c->add_option("--method", a.method, "variational | deterministic | physics_informed")
                   ->capture_default_str();
  a.o_data = c->add_option("--data", a.data, "Training split directory, or a dataset root holding <system>/train");
  a.o_out = c->add_option("--out", a.out, "Artifact directory");
  a.o_epochs = c->add_option("--epochs", a.epochs, "Epochs (default: 20 streaking, 10 video_cs and hologram)");
  a.o_batch = c->add_option("--batch-size", a.batch_size, "Batch size (default " + std::to_string(d.batch_size) + ")");
  a.o_latent = c->add_option("--latent-dim", a.latent_dim, "Latent dimension M (default " + std::to_string(d.latent_dim) + ")");
  a.o_rec = c->add_option("--recurrences", a.recurrences, "Recurrences T (default " + std::to_string(d.recurrences) + ")");
  a.o_seed = c->add_option("--seed", a.seed, "Seed for initialisation, shuffling and latent noise (default 0)");
  a.o_lr = c->add_option("--lr", a.lr, "Adam learning rate (default 1e-3)");
  a.o_gamma = c->add_option("--gamma", a.gamma, "Weight of the inference bound in the hybrid objective (default 0.5)");
  a.o_alpha = c->add_option("--alpha", a.alpha, "Measurement-consistency scale alpha (default 1)");
  a.o_beta = c->add_option("--beta", a.beta, "Reconstruction scale beta (default 1)");
  c->add_flag("--deterministic", a.deterministic, "float64 and one thread; reruns reproduce the loss curve exactly");
  c->add_flag("--resume", a.resume, "Continue the artifact in --out up to --epochs");
}

int run_train(const TrainArgs& a, const Common& common) {
  const RunConfig rc = read_run_config(common.config);
  const fs::path data = resolve_path(a.o_data, a.data, rc.paths, "data_root", "training data");
  const fs::path out = resolve_path(a.o_out, a.out, rc.paths, "artifact_dir", "artifact directory");
  std::optional<SystemId> sys;
  if (a.o_system->count() || rc.system) sys = pick_system(a.o_system, a.system, rc);
  const Dataset ds = load_split(data, sys, "train");
  if (sys && *sys != ds.system) {
    throw SystemMismatchError("--system " + std::string(to_string(*sys)) + " but the dataset is " +
                              std::string(to_string(ds.system)));
  }
  const ForwardModelPtr fm = make_forward_model(ds.system, ds.physics);
  if (!rc.physics.is_null() && config_hash(physics_for(ds.system, rc)) != config_hash(fm->config_json())) {
    throw SystemMismatchError("config physics differs from the dataset's physics");
  }
  const Method method = method_from_string(a.o_method->count() ? a.method : rc.model.value("method", a.method));

  json model_json = rc.model;
  model_json.erase("method");
  ModelConfig cfg = ModelConfig::from_json(model_json, ModelConfig::defaults(ds.system));
  if (a.o_epochs->count()) cfg.epochs = a.epochs;
  if (a.o_batch->count()) cfg.batch_size = a.batch_size;
  if (a.o_latent->count()) cfg.latent_dim = a.latent_dim;
  if (a.o_rec->count()) cfg.recurrences = a.recurrences;
  if (a.o_seed->count()) {
    cfg.seed = a.seed;
  } else if (rc.seed && !rc.model.contains("seed")) {
    cfg.seed = *rc.seed;
  }
  if (a.o_lr->count()) cfg.learning_rate = a.lr;
  if (a.o_gamma->count()) cfg.gamma = a.gamma;
  if (a.o_alpha->count()) cfg.alpha = a.alpha;
  if (a.o_beta->count()) cfg.beta = a.beta;
  if (a.deterministic) cfg.dtype = "float64";
  cfg.validate();

  TrainOptions topt;
  topt.deterministic = a.deterministic;
  topt.on_epoch = [](const EpochStats& e) {
    std::fprintf(stderr, "epoch %zu loss %.6g elbo %.6g consistency %.6g (%.1f s)\n", e.epoch, e.loss, e.elbo,
                 e.consistency, e.seconds);
  };
  std::shared_ptr<RetrievalModel> model;
  if (a.resume && fs::exists(out / "params.manifest.json")) {
    model = load_artifact(out);
    if (model->method() != method || model->system() != ds.system) {
      throw SystemMismatchError("artifact in " + out.string() + " holds a different method or system");
    }
    model->config().epochs = cfg.epochs;
    continue_training(*model, ds, topt);
  } else {
    model = train(method, cfg, ds, fm, topt);
  }
  save_artifact(out, *model);
  json eff = {{"command", "train"}, {"system", to_string(ds.system)}, {"method", to_string(method)},
              {"physics", fm->config_json()}, {"model", model->config().to_json()},
              {"stats", model->stats().to_json()}, {"dataset_hash", ds.config_hash()},
              {"deterministic", a.deterministic}};
  write_effective(out, eff);
  const std::string hash = read_json_file(out / "effective_config.json")["config_hash"];
  write_text_file(out / "loss_curve.csv", loss_curve_csv(model->curve, hash));
  if (common.plots) plots::loss_curve(out / "plots" / "loss_curve.png", model->curve);
  print_line(out.string());
  return 0;
}

// ---- retrieve --------------------------------------------------------------

struct RetrieveArgs {
  std::string artifact, measurement, out;
  std::size_t instances = 10;
  std::uint64_t seed = 0;
  CLI::Option *o_artifact, *o_meas, *o_out, *o_instances, *o_seed;
};

void add_retrieve(CLI::App& app, RetrieveArgs& a) {
  auto* c = app.add_subcommand("retrieve", "Draw reconstruction instances for one measurement");
  a.o_artifact = c->add_option("--artifact", a.artifact, "Model artifact directory");
  a.o_meas = c->add_option("--measurement", a.measurement, "Measurement TensorFile (.tns)")->required();
  a.o_out = c->add_option("--out", a.out, "Output directory")->required();
  a.o_instances = c->add_option("--instances", a.instances, "Instances to draw (variational models)")
                      ->capture_default_str();
  a.o_seed = c->add_option("--seed", a.seed, "Latent noise seed")->capture_default_str();
}

int run_retrieve(const RetrieveArgs& a, const Common& common) {
  const RunConfig rc = read_run_config(common.config);
  const fs::path artifact = resolve_path(a.o_artifact, a.artifact, rc.paths, "artifact_dir", "artifact");
  const std::size_t n = pick(a.o_instances, a.instances, rc.eval, "instances", a.instances);
  const std::uint64_t seed = a.o_seed->count() ? a.seed : rc.seed.value_or(a.seed);
  const auto model = load_artifact(artifact);
  const ForwardModel& fm = model->forward_model();
  const Tensor t = tensor_read(a.measurement);
  if (t.dims != fm.measurement_shape()) {
    throw SystemMismatchError("measurement has shape " + shape_string(t.dims) + " but the " +
                              std::string(to_string(fm.system())) + " model expects " +
                              shape_string(fm.measurement_shape()));
  }
  const MeasurementVec g(fm.system(), t.dims, t.values, fm.nonneg_measurement());
  const auto est = reconstruct({"", model, std::nullopt}, g, fm, n, seed);

  const fs::path out = a.out;
  json eff = {{"command", "retrieve"}, {"artifact", read_json_file(artifact / "config.json")["config_hash"]},
              {"measurement_bytes", config_hash_hex(json(read_file_bytes(a.measurement)))},
              {"instances", est.size()}, {"seed", seed}};
  write_effective(out, eff);
  const std::string hash = read_json_file(out / "effective_config.json")["config_hash"];
  std::string csv = "# config_hash=" + hash + "\ninstance,fidelity_db\n";
  char name[64], line[96];
  for (std::size_t i = 0; i < est.size(); ++i) {
    std::snprintf(name, sizeof name, "instance_%03zu", i);
    tensor_write(out / (std::string(name) + ".tns"), make_tensor(fm.signal_shape(), est[i]));
    std::snprintf(line, sizeof line, "%zu,%.6f\n", i, fidelity(est[i], g.data(), fm));
    csv += line;
    if (common.plots) {
      const std::size_t n_xuv = fm.system() == SystemId::streaking
                                    ? dynamic_cast<const StreakingModel&>(fm).config().n_xuv : 0;
      plots::signal(out / "plots" / (std::string(name) + ".png"), fm.system(), est[i], fm.signal_shape(), n_xuv);
    }
  }
  write_text_file(out / "fidelity.csv", csv);
  if (common.plots && fm.system() == SystemId::streaking && est.size() > 1) {
    const std::size_t n_xuv = dynamic_cast<const StreakingModel&>(fm).config().n_xuv;
    std::vector<std::vector<double>> curves;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, est.size()); ++i) curves.push_back(plots::xuv_amplitude(est[i], n_xuv));
    plots::lines(out / "plots" / "xuv_instances.png", curves);
  }
  print_line(out.string());
  return 0;
}

// ---- baseline --------------------------------------------------------------

struct BaselineArgs {
  std::string system = "video_cs", measurement, out;
  double lambda = 100.0;
  std::size_t max_iters = 200;
  CLI::Option *o_system, *o_meas, *o_out, *o_lambda, *o_iters;
};

void add_baseline(CLI::App& app, BaselineArgs& a) {
  auto* c = app.add_subcommand("baseline", "TV-regularised MAP reconstruction of one measurement");
  a.o_system = c->add_option("--system", a.system, "Linear system")->capture_default_str();
  a.o_meas = c->add_option("--measurement", a.measurement, "Measurement TensorFile (.tns)")->required();
  a.o_out = c->add_option("--out", a.out, "Output directory")->required();
  a.o_lambda = c->add_option("--lambda", a.lambda, "TV weight")->capture_default_str();
  a.o_iters = c->add_option("--max-iters", a.max_iters, "Iteration cap")->capture_default_str();
}

int run_baseline(const BaselineArgs& a, const Common& common) {
  const RunConfig rc = read_run_config(common.config);
  const SystemId system = pick_system(a.o_system, a.system, rc, SystemId::video_cs);
  const ForwardModelPtr fm = make_forward_model(system, physics_for(system, rc));
  TvConfig tv = TvConfig::from_json(rc.tv);
  if (a.o_lambda->count()) tv.lambda_tv = a.lambda;
  if (a.o_iters->count()) tv.max_iters = a.max_iters;
  const Tensor t = tensor_read(a.measurement);
  if (t.dims != fm->measurement_shape()) {
    throw SystemMismatchError("measurement has shape " + shape_string(t.dims) + " but " +
                              std::string(to_string(system)) + " expects " + shape_string(fm->measurement_shape()));
  }
  const TvResult res = tv_map_solve(t.values, *fm, tv);
  const fs::path out = a.out;
  json eff = {{"command", "baseline"}, {"system", to_string(system)}, {"physics", fm->config_json()},
              {"tv", tv.to_json()}, {"measurement_bytes", config_hash_hex(json(read_file_bytes(a.measurement)))}};
  write_effective(out, eff);
  const std::string hash = read_json_file(out / "effective_config.json")["config_hash"];
  tensor_write(out / "reconstruction.tns", make_tensor(fm->signal_shape(), res.f));
  write_text_file(out / "tv_history.csv", "# config_hash=" + hash + "\n" + tv_history_csv(res.history));
  if (common.plots) plots::signal(out / "plots" / "reconstruction.png", system, res.f, fm->signal_shape());
  print_line(out.string());
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> methods;
  std::string testset, out, formula = "peak";
  std::size_t instances = 10;
  std::uint64_t seed = 0;
  double lambda = 100.0;
  CLI::Option *o_methods, *o_testset, *o_out, *o_formula, *o_instances, *o_seed, *o_lambda;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("eval", "Score methods on a test split (PSNR and fidelity)");
  a.o_methods = c->add_option("--methods", a.methods,
                              "Methods as artifact directories, label=directory, or 'tv'")->delimiter(',');
  a.o_testset = c->add_option("--testset", a.testset, "Test split directory");
  a.o_out = c->add_option("--out", a.out, "Report directory");
  a.o_instances = c->add_option("--instances", a.instances, "Instances per record for variational models")
                      ->capture_default_str();
  a.o_seed = c->add_option("--seed", a.seed, "Latent noise seed")->capture_default_str();
  a.o_formula = c->add_option("--formula", a.formula, "PSNR formula: peak (max/MSE) or standard (max^2/MSE)")
                    ->capture_default_str();
  a.o_lambda = c->add_option("--lambda", a.lambda, "TV weight for the 'tv' method")->capture_default_str();
}

int run_eval(const EvalArgs& a, const Common& common) {
  const RunConfig rc = read_run_config(common.config);
  const fs::path testdir = resolve_path(a.o_testset, a.testset, rc.paths, "testset", "test set");
  const fs::path out = resolve_path(a.o_out, a.out, rc.paths, "report_dir", "report directory");
  std::vector<std::string> specs = a.methods;
  if (!a.o_methods->count() && rc.eval.contains("methods")) specs = rc.eval["methods"].get<std::vector<std::string>>();
  if (specs.empty()) throw ConfigError("no methods given (--methods or eval.methods in the config)");
  EvalOptions eo;
  eo.instances = pick(a.o_instances, a.instances, rc.eval, "instances", a.instances);
  eo.seed = a.o_seed->count() ? a.seed : rc.seed.value_or(a.seed);
  eo.formula = psnr_formula_from_string(pick(a.o_formula, a.formula, rc.eval, "formula", a.formula));

  const Dataset testset = read_dataset(testdir);
  const ForwardModelPtr fm = make_forward_model(testset.system, testset.physics);
  std::vector<MethodSpec> methods;
  json eff_methods = json::array();
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    std::string label = eq == std::string::npos ? "" : s.substr(0, eq);
    const std::string target = eq == std::string::npos ? s : s.substr(eq + 1);
    if (target == "tv") {
      TvConfig tv = TvConfig::from_json(rc.tv);
      if (a.o_lambda->count()) tv.lambda_tv = a.lambda;
      methods.push_back({label.empty() ? "tv" : label, nullptr, tv});
      eff_methods.push_back({{"label", methods.back().label}, {"tv", tv.to_json()}});
      continue;
    }
    auto model = load_artifact(target);
    if (model->system() != testset.system ||
        config_hash(model->forward_model().config_json()) != config_hash(fm->config_json())) {
      throw SystemMismatchError("artifact " + target + " was trained on a different system or physics");
    }
    if (label.empty()) label = std::string(to_string(model->method()));
    methods.push_back({label, model, std::nullopt});
    eff_methods.push_back({{"label", label}, {"artifact", read_json_file(fs::path(target) / "config.json")["config_hash"]}});
  }
  MetricsReport report = evaluate(methods, testset, *fm, eo);
  json eff = {{"command", "eval"}, {"system", to_string(testset.system)}, {"methods", eff_methods},
              {"testset_hash", testset.config_hash()}, {"instances", eo.instances}, {"seed", eo.seed},
              {"formula", to_string(eo.formula)}};
  write_effective(out, eff);
  report.config_hash = read_json_file(out / "effective_config.json")["config_hash"];
  report.write(out);
  for (const auto& agg : report.aggregates()) {
    std::fprintf(stdout, "%-18s n=%-5zu psnr %8.3f dB  fidelity %8.3f dB\n", agg.method.c_str(), agg.count,
                 agg.mean_psnr_db, agg.mean_fidelity_db);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"varsig: measurement-consistent signal retrieval with variational networks"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config, "JSON run config; flags override its values");
  app.add_flag("--plots", common.plots, "Also write PNG figures into the output directory");
  app.footer("Environment: VARSIG_THREADS caps worker threads. Exit codes: 0 ok, 2 usage, 3 missing file, "
             "4 system mismatch, 5 format, 6 config, 7 numerical, 8 shape, 9 domain, 10 state, "
             "11 unsupported model, 1 other.");
  SynthArgs synth;
  TrainArgs train_args;
  RetrieveArgs retrieve;
  BaselineArgs baseline;
  EvalArgs eval;
  add_synth(app, synth);
  add_train(app, train_args);
  add_retrieve(app, retrieve);
  add_baseline(app, baseline);
  add_eval(app, eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 2);
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "synth") return run_synth(synth, common);
    if (cmd == "train") return run_train(train_args, common);
    if (cmd == "retrieve") return run_retrieve(retrieve, common);
    if (cmd == "baseline") return run_baseline(baseline, common);
    return run_eval(eval, common);
  } catch (const Error& e) {
    return report_error(to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const json::exception& e) {
    return report_error("config", e.what(), 6);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
}
