#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "presup/models.hpp"

namespace presup {

// Self-describing container: config, vocabulary, variant state and every
// named parameter tensor. Serialises deterministically.
nlohmann::ordered_json checkpoint_json(const Model& model, const nlohmann::ordered_json& meta = {});
void save_checkpoint(const Model& model, const std::string& path,
                     const nlohmann::ordered_json& meta = {});

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  nlohmann::json meta;
};

LoadedCheckpoint checkpoint_from_json(const nlohmann::json& j, const std::string& source);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace presup
