#include "varsig/model/artifact.hpp"

#include <cstdio>

#include "varsig/core/dataset.hpp"
#include "varsig/core/error.hpp"
#include "varsig/core/tensor_file.hpp"
#include "varsig/physics/registry.hpp"

namespace fs = std::filesystem;

namespace varsig {

namespace {

constexpr int kArtifactVersion = 1;

Tensor to_file_tensor(const torch::Tensor& t) {
  const torch::Tensor d = t.detach().to(torch::kCPU, torch::kDouble).contiguous();
  Shape dims;
  for (auto s : d.sizes()) dims.push_back(static_cast<std::size_t>(s));
  const double* p = d.data_ptr<double>();
  return make_tensor(dims, std::vector<double>(p, p + d.numel()),
                     t.scalar_type() == torch::kDouble ? DType::f64 : DType::f32);
}

torch::Tensor from_file_tensor(const Tensor& t, torch::Dtype dtype) {
  std::vector<std::int64_t> dims;
  for (auto s : t.dims) dims.push_back(static_cast<std::int64_t>(s));
  torch::Tensor d = torch::empty(dims, torch::kDouble);
  std::copy(t.values.begin(), t.values.end(), d.data_ptr<double>());
  return d.to(dtype);
}

std::string param_file(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu.tns", prefix, i);
  return std::string("params/") + buf;
}

json epoch_json(const EpochStats& e) {
  return {{"epoch", e.epoch}, {"loss", e.loss}, {"elbo", e.elbo}, {"consistency", e.consistency},
          {"kl", e.kl}, {"recon", e.recon}, {"misfit", e.misfit}};
}

EpochStats epoch_from_json(const json& j) {
  EpochStats e;
  e.epoch = j.at("epoch").get<std::size_t>();
  e.loss = j.at("loss").get<double>();
  e.elbo = j.at("elbo").get<double>();
  e.consistency = j.at("consistency").get<double>();
  e.kl = j.at("kl").get<double>();
  e.recon = j.at("recon").get<double>();
  e.misfit = j.at("misfit").get<double>();
  return e;
}

void copy_into(torch::Tensor& dst, const Tensor& src, const std::string& name) {
  Shape want;
  for (auto s : dst.sizes()) want.push_back(static_cast<std::size_t>(s));
  if (want != src.dims) {
    throw FormatError("parameter " + name + " has shape " + shape_string(src.dims) + ", expected " +
                          shape_string(want),
                      0);
  }
  torch::NoGradGuard ng;
  dst.copy_(from_file_tensor(src, dst.scalar_type()));
}

}  // namespace

void save_artifact(const fs::path& dir, const RetrievalModel& model) {
  fs::create_directories(dir / "params");
  json cfg = {{"version", kArtifactVersion},
              {"method", std::string(to_string(model.method()))},
              {"system", std::string(to_string(model.system()))},
              {"physics", model.forward_model().config_json()},
              {"model", model.config().to_json()},
              {"epochs_done", model.curve.size()}};
  json curve = json::array();
  for (const auto& e : model.curve) curve.push_back(epoch_json(e));
  cfg["curve"] = curve;
  cfg["config_hash"] = config_hash_hex({{"method", cfg["method"]}, {"system", cfg["system"]},
                                        {"physics", cfg["physics"]}, {"model", cfg["model"]}});
  write_json_file(dir / "config.json", cfg);
  write_json_file(dir / "stats.json", model.stats().to_json());

  json params = json::array();
  std::size_t i = 0;
  for (const auto& item : model.net()->named_parameters()) {
    const std::string file = param_file("p", i++);
    tensor_write(dir / file, to_file_tensor(item.value()));
    Shape dims;
    for (auto s : item.value().sizes()) dims.push_back(static_cast<std::size_t>(s));
    params.push_back({{"name", item.key()}, {"file", file}, {"shape", dims}});
  }
  json manifest = {{"version", kArtifactVersion}, {"dtype", model.config().dtype}, {"params", params}};

  if (model.optimizer) {
    json states = json::array();
    std::size_t k = 0;
    for (const auto& item : model.net()->named_parameters()) {
      const auto& table = model.optimizer->state();
      const auto it = table.find(item.value().unsafeGetTensorImpl());
      if (it == table.end()) continue;
      const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
      const std::string m1 = param_file("m", k), m2 = param_file("v", k);
      ++k;
      tensor_write(dir / m1, to_file_tensor(s.exp_avg()));
      tensor_write(dir / m2, to_file_tensor(s.exp_avg_sq()));
      states.push_back({{"name", item.key()}, {"step", s.step()}, {"exp_avg", m1}, {"exp_avg_sq", m2}});
    }
    const auto& opts = static_cast<const torch::optim::AdamOptions&>(model.optimizer->defaults());
    manifest["optimizer"] = {{"type", "adam"}, {"lr", opts.lr()}, {"state", states}};
  }
  write_json_file(dir / "params.manifest.json", manifest);
}

std::shared_ptr<RetrievalModel> load_artifact(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw MissingFileError(dir.string());
  const json cfg = read_json_file(dir / "config.json");
  const json manifest = read_json_file(dir / "params.manifest.json");
  std::shared_ptr<RetrievalModel> model;
  try {
    if (cfg.at("version").get<int>() != kArtifactVersion) {
      throw ConfigError("unsupported artifact version in " + (dir / "config.json").string());
    }
    const Method method = method_from_string(cfg.at("method").get<std::string>());
    const SystemId system = system_from_string(cfg.at("system").get<std::string>());
    const ModelConfig mc = ModelConfig::from_json(cfg.at("model"), ModelConfig::defaults(system));
    const NormStats stats = NormStats::from_json(read_json_file(dir / "stats.json"));
    model = std::make_shared<RetrievalModel>(method, mc, make_forward_model(system, cfg.at("physics")), stats);
    for (const auto& e : cfg.at("curve")) model->curve.push_back(epoch_from_json(e));
  } catch (const json::exception& e) {
    throw ConfigError("bad artifact config in " + dir.string() + ": " + e.what());
  }

  auto named = model->net()->named_parameters();
  std::size_t seen = 0;
  try {
    for (const auto& p : manifest.at("params")) {
      const std::string name = p.at("name").get<std::string>();
      torch::Tensor* dst = named.find(name);
      if (!dst) throw ConfigError("artifact parameter " + name + " is not part of the network");
      copy_into(*dst, tensor_read(dir / p.at("file").get<std::string>()), name);
      ++seen;
    }
    if (seen != named.size()) throw ConfigError("artifact is missing network parameters");

    if (manifest.contains("optimizer")) {
      const json& opt = manifest["optimizer"];
      model->optimizer = std::make_shared<torch::optim::Adam>(
          model->net()->parameters(), torch::optim::AdamOptions(opt.at("lr").get<double>()));
      for (const auto& s : opt.at("state")) {
        const std::string name = s.at("name").get<std::string>();
        torch::Tensor* p = named.find(name);
        if (!p) throw ConfigError("optimizer state for unknown parameter " + name);
        auto st = std::make_unique<torch::optim::AdamParamState>();
        st->step(s.at("step").get<std::int64_t>());
        st->exp_avg(from_file_tensor(tensor_read(dir / s.at("exp_avg").get<std::string>()), p->scalar_type()));
        st->exp_avg_sq(from_file_tensor(tensor_read(dir / s.at("exp_avg_sq").get<std::string>()), p->scalar_type()));
        model->optimizer->state()[p->unsafeGetTensorImpl()] = std::move(st);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad parameter manifest in " + dir.string() + ": " + e.what());
  }
  return model;
}

}  // namespace varsig
