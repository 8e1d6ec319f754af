#include "presup/checkpoint.hpp"

#include <fstream>

#include "presup/error.hpp"

namespace presup {

namespace {
constexpr const char* kFormat = "presup-checkpoint";
constexpr int kVersion = 1;

Vocab special_only_vocab() {
  std::vector<std::string> specials{std::string(kMarker), std::string(kUnknownToken),
                                    std::string(kPadToken)};
  return Vocab::from_lists(specials, specials);
}
}  // namespace

nlohmann::ordered_json checkpoint_json(const Model& model, const nlohmann::ordered_json& meta) {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["config"] = to_json(model.config());
  // The majority-class model needs nothing but its label.
  if (model.variant() != Variant::kMfc) {
    j["vocab"] = {{"tokens", model.vocab().tokens()}, {"pos", model.vocab().pos_tags()}};
  }
  j["state"] = model.extra_state();
  j["meta"] = meta.is_null() ? nlohmann::ordered_json::object() : meta;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [name, e] : model.params()) {
    params[name] = {{"shape", e.value.shape()}, {"trainable", e.trainable}, {"data", e.value.values()}};
  }
  j["params"] = std::move(params);
  return j;
}

void save_checkpoint(const Model& model, const std::string& path, const nlohmann::ordered_json& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << checkpoint_json(model, meta).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

LoadedCheckpoint checkpoint_from_json(const nlohmann::json& j, const std::string& source) {
  try {
    if (j.value("format", "") != kFormat || j.value("version", 0) != kVersion) {
      throw std::runtime_error(source + ": not a version " + std::to_string(kVersion) + " checkpoint");
    }
    const ModelConfig cfg = model_config_from_json(j.at("config"));
    Vocab vocab = special_only_vocab();
    if (j.contains("vocab")) {
      vocab = Vocab::from_lists(j.at("vocab").at("tokens").get<std::vector<std::string>>(),
                                j.at("vocab").at("pos").get<std::vector<std::string>>());
    } else if (cfg.variant != Variant::kMfc) {
      throw std::runtime_error(source + ": checkpoint has no vocabulary");
    }
    const auto& params = j.at("params");
    auto read_tensor = [&](const std::string& name) {
      const auto& p = params.at(name);
      return Tensor(p.at("shape").get<Shape>(), p.at("data").get<std::vector<double>>());
    };

    Tensor table;
    if (params.contains("embed.words")) {
      table = read_tensor("embed.words");
      if (table.rank() != 2 || table.shape()[0] != vocab.size()) {
        throw std::runtime_error(source + ": vocabulary of " + std::to_string(vocab.size()) +
                                 " entries does not match embedding table " + to_string(table.shape()));
      }
    }
    Rng rng(0);
    LoadedCheckpoint out;
    out.model = instantiate_model(cfg, std::move(vocab), std::move(table), {}, rng);
    out.model->load_extra_state(j.at("state"));

    ParamStore& store = out.model->params();
    if (params.size() != store.size()) {
      throw std::runtime_error(source + ": parameter set does not match the model configuration");
    }
    for (const std::string& name : store.names()) {
      if (!params.contains(name)) throw std::runtime_error(source + ": missing parameter " + name);
      Tensor t = read_tensor(name);
      if (t.shape() != store.get(name).shape()) {
        throw std::runtime_error(source + ": parameter " + name + " has shape " + to_string(t.shape()) +
                                 ", expected " + to_string(store.get(name).shape()));
      }
      store.get(name) = std::move(t);
    }
    out.meta = j.value("meta", nlohmann::json::object());
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(source + ": malformed checkpoint: " + e.what());
  }
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": malformed checkpoint: " + e.what());
  }
  return checkpoint_from_json(j, path);
}

}  // namespace presup
