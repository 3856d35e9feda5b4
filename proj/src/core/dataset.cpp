#include "varsig/core/dataset.hpp"

#include <cstdio>

#include "varsig/core/error.hpp"
#include "varsig/core/tensor_file.hpp"

namespace varsig {

namespace fs = std::filesystem;

std::string Dataset::config_hash() const {
  json j = {{"system", std::string(to_string(system))},
            {"split", split},
            {"seed", seed},
            {"physics", physics},
            {"extra", extra}};
  return config_hash_hex(j);
}

std::string record_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

fs::path split_dir(const fs::path& root, SystemId system, const std::string& split) {
  return root / std::string(to_string(system)) / split;
}

json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("invalid JSON in " + path.string() + ": " + e.what(), e.byte);
  }
}

void write_json_file(const fs::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

fs::path write_dataset(const fs::path& root, const Dataset& ds) {
  const fs::path dir = split_dir(root, ds.system, ds.split);
  fs::create_directories(dir);
  json meta = json::array();
  json seeds = json::array();
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const DatasetRecord& r = ds.records[i];
    if (r.f.system() != ds.system || r.g.system() != ds.system) {
      throw SystemMismatchError("record " + std::to_string(i) + " belongs to another system");
    }
    const std::string stem = record_stem(i);
    tensor_write(dir / (stem + ".f.tns"),
                 make_tensor(r.f.shape(), {r.f.data().begin(), r.f.data().end()}));
    tensor_write(dir / (stem + ".g.tns"),
                 make_tensor(r.g.shape(), {r.g.data().begin(), r.g.data().end()}));
    json m = json::object();
    for (const auto& [k, v] : r.meta) m[k] = v;
    meta.push_back(m);
    seeds.push_back(r.seed);
  }
  json manifest = {{"system", std::string(to_string(ds.system))},
                   {"split", ds.split},
                   {"count", ds.records.size()},
                   {"seed", ds.seed},
                   {"config_hash", ds.config_hash()},
                   {"physics", ds.physics},
                   {"extra", ds.extra},
                   {"nonneg", ds.records.empty() ? false : ds.records.front().g.nonneg()},
                   {"record_seeds", seeds},
                   {"record_meta", meta}};
  write_json_file(dir / "manifest.json", manifest);
  return dir;
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw MissingFileError(manifest_path.string());
  const json manifest = read_json_file(manifest_path);
  Dataset ds;
  try {
    ds.system = system_from_string(manifest.at("system").get<std::string>());
    ds.split = manifest.at("split").get<std::string>();
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    ds.physics = manifest.at("physics");
    ds.extra = manifest.value("extra", json::object());
    const auto count = manifest.at("count").get<std::size_t>();
    const bool nonneg = manifest.value("nonneg", false);
    const json& seeds = manifest.at("record_seeds");
    const json& meta = manifest.at("record_meta");
    if (seeds.size() != count || meta.size() != count) {
      throw ConfigError("manifest count disagrees with record lists in " + manifest_path.string());
    }
    ds.records.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::string stem = record_stem(i);
      Tensor f = tensor_read(dir / (stem + ".f.tns"));
      Tensor g = tensor_read(dir / (stem + ".g.tns"));
      std::map<std::string, std::string> m;
      for (const auto& [k, v] : meta[i].items()) m[k] = v.get<std::string>();
      ds.records.push_back(DatasetRecord{
          SignalVec(ds.system, f.dims, std::move(f.values)),
          MeasurementVec(ds.system, g.dims, std::move(g.values), nonneg),
          seeds[i].get<std::uint64_t>(), std::move(m)});
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  return ds;
}

Dataset read_dataset(const fs::path& root, SystemId system, const std::string& split) {
  return read_dataset(split_dir(root, system, split));
}

}  // namespace varsig
