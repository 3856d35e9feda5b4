#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "varsig/core/forward_model.hpp"
#include "varsig/core/types.hpp"

namespace varsig {

/// An in-memory split. `physics` is the forward-model config the records
/// were generated with; `extra` carries generator-specific manifest fields
/// (mask seed, image source, noise level, ...).
struct Dataset {
  SystemId system = SystemId::generic;
  std::string split = "train";
  std::uint64_t seed = 0;
  json physics = json::object();
  json extra = json::object();
  std::vector<DatasetRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  /// Hash over (system, split, seed, physics, extra).
  std::string config_hash() const;
};

std::string record_stem(std::size_t index);

/// Directory of a split: <root>/<system>/<split>.
std::filesystem::path split_dir(const std::filesystem::path& root, SystemId system,
                                 const std::string& split);

/// Writes <root>/<system>/<split>/{manifest.json, NNNNNN.f.tns, NNNNNN.g.tns}
/// and returns the split directory.
std::filesystem::path write_dataset(const std::filesystem::path& root, const Dataset& ds);

/// Reads a split directory written by write_dataset.
Dataset read_dataset(const std::filesystem::path& dir);

/// Accepts either a split directory or a root plus system/split.
Dataset read_dataset(const std::filesystem::path& root, SystemId system,
                     const std::string& split);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace varsig
