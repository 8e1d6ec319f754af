#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "presup/extract.hpp"
#include "presup/models.hpp"
#include "presup/train.hpp"

namespace presup {

// Configuration of one reproducible run. The document is a JSON object whose
// leaves may be overridden individually ("train.batch_size=32"); every key
// must exist in defaults().
struct RunConfig {
  nlohmann::json doc;

  std::uint64_t seed = 0;
  std::string name;
  std::filesystem::path out_dir;
  std::filesystem::path corpus;
  std::filesystem::path embeddings;
  std::filesystem::path datasets_dir;
  std::string dataset;
  ExtractionConfig extraction;
  ModelConfig model;
  TrainConfig train;

  static nlohmann::json defaults();
  // Defaults with the file at `path` merged over them; empty path gives
  // the defaults alone.
  static nlohmann::json load_document(const std::string& path);
  // "a.b.c=value"; value is parsed as JSON and falls back to a plain string.
  static void apply_override(nlohmann::json& doc, std::string_view assignment);
  static RunConfig from_document(const nlohmann::json& doc);

  // Named stream of the global seed: "extraction", "init", "train".
  std::uint64_t sub_seed(std::string_view component) const;

  std::filesystem::path dataset_dir(const std::string& dataset_name) const;
  std::filesystem::path checkpoint_path() const;
  std::filesystem::path reports_dir() const { return out_dir / "reports"; }
  std::filesystem::path stats_dir() const { return out_dir / "stats"; }
};

}  // namespace presup
