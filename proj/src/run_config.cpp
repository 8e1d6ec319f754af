#include "presup/run_config.hpp"

#include <fstream>

#include "presup/error.hpp"
#include "presup/rng.hpp"

namespace presup {

namespace {

using nlohmann::json;

void check_keys(const json& doc, const json& reference, const std::string& prefix) {
  for (const auto& [key, value] : doc.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!reference.contains(key)) throw UsageError("config: unknown key '" + path + "'");
    const json& ref = reference.at(key);
    if (ref.is_object()) {
      if (!value.is_object()) throw UsageError("config: '" + path + "' must be an object");
      check_keys(value, ref, path);
    }
  }
}

std::vector<std::string> split_dotted(std::string_view key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    parts.emplace_back(key.substr(start, dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

template <typename T>
T get(const json& doc, const char* section, const char* key) {
  try {
    return doc.at(section).at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + section + "." + key + ": " + e.what());
  }
}

}  // namespace

json RunConfig::defaults() {
  const ExtractionConfig ex;
  const TrainConfig tr;
  return {
      {"seed", 0},
      {"name", ""},
      {"out", "out"},
      {"dataset", "all"},
      {"paths", {{"corpus", ""}, {"embeddings", ""}, {"datasets", ""}}},
      {"extraction",
       {{"adverbs", ex.adverbs},
        {"window_before", ex.window_before},
        {"max_len", ex.max_len},
        {"test_sections", json::array()},
        {"dev_fraction", ex.dev_fraction},
        {"strict_negatives", ex.strict_negatives}}},
      {"model", json::parse(to_json(ModelConfig{}).dump())},
      {"train",
       {{"batch_size", tr.batch_size},
        {"dropout", tr.dropout},
        {"clip", tr.clip},
        {"clip_lo", tr.clip_lo},
        {"clip_hi", tr.clip_hi},
        {"patience", tr.patience},
        {"max_epochs", tr.max_epochs},
        {"learning_rate", tr.adam.learning_rate},
        {"beta1", tr.adam.beta1},
        {"beta2", tr.adam.beta2},
        {"epsilon", tr.adam.epsilon}}},
  };
}

json RunConfig::load_document(const std::string& path) {
  json doc = defaults();
  if (path.empty()) return doc;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file " + path);
  json user;
  try {
    in >> user;
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  if (!user.is_object()) throw UsageError(path + ": config must be a JSON object");
  check_keys(user, doc, "");
  doc.merge_patch(user);
  return doc;
}

void RunConfig::apply_override(json& doc, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw UsageError("override '" + std::string(assignment) + "' is not key=value");
  }
  const auto parts = split_dotted(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));

  const json reference = defaults();
  const json* ref = &reference;
  json* node = &doc;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!ref->is_object() || !ref->contains(parts[i])) {
      throw UsageError("config: unknown key '" + std::string(assignment.substr(0, eq)) + "'");
    }
    ref = &ref->at(parts[i]);
    node = &(*node)[parts[i]];
  }
  if (ref->is_object()) {
    throw UsageError("config: '" + std::string(assignment.substr(0, eq)) + "' is not a leaf key");
  }
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded() || (ref->is_string() && !value.is_string())) value = raw;
  *node = std::move(value);
}

RunConfig RunConfig::from_document(const json& doc) {
  check_keys(doc, defaults(), "");
  RunConfig c;
  c.doc = doc;
  try {
    c.seed = doc.at("seed").get<std::uint64_t>();
    c.name = doc.at("name").get<std::string>();
    c.out_dir = doc.at("out").get<std::string>();
    c.dataset = doc.at("dataset").get<std::string>();
    c.corpus = doc.at("paths").at("corpus").get<std::string>();
    c.embeddings = doc.at("paths").at("embeddings").get<std::string>();
    const auto datasets = doc.at("paths").at("datasets").get<std::string>();
    c.datasets_dir = datasets.empty() ? c.out_dir / "datasets" : std::filesystem::path(datasets);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (c.out_dir.empty()) throw UsageError("config: 'out' must not be empty");

  c.extraction.adverbs = get<std::vector<std::string>>(doc, "extraction", "adverbs");
  for (auto& a : c.extraction.adverbs) {
    for (char& ch : a) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  c.extraction.window_before = get<std::size_t>(doc, "extraction", "window_before");
  c.extraction.max_len = get<std::size_t>(doc, "extraction", "max_len");
  for (const auto& r : get<std::vector<std::string>>(doc, "extraction", "test_sections")) {
    c.extraction.test_sections.push_back(SectionRange::parse(r));
  }
  c.extraction.dev_fraction = get<double>(doc, "extraction", "dev_fraction");
  c.extraction.strict_negatives = get<bool>(doc, "extraction", "strict_negatives");
  c.extraction.validate();

  c.model = model_config_from_json(doc.at("model"));

  c.train.batch_size = get<std::size_t>(doc, "train", "batch_size");
  c.train.dropout = get<double>(doc, "train", "dropout");
  c.train.clip = get<bool>(doc, "train", "clip");
  c.train.clip_lo = get<double>(doc, "train", "clip_lo");
  c.train.clip_hi = get<double>(doc, "train", "clip_hi");
  c.train.patience = get<std::size_t>(doc, "train", "patience");
  c.train.max_epochs = get<std::size_t>(doc, "train", "max_epochs");
  c.train.adam.learning_rate = get<double>(doc, "train", "learning_rate");
  c.train.adam.beta1 = get<double>(doc, "train", "beta1");
  c.train.adam.beta2 = get<double>(doc, "train", "beta2");
  c.train.adam.epsilon = get<double>(doc, "train", "epsilon");
  c.train.seed = c.sub_seed("train");
  c.train.validate();
  return c;
}

std::uint64_t RunConfig::sub_seed(std::string_view component) const {
  return Rng(seed).derive(component).next_u64();
}

std::filesystem::path RunConfig::dataset_dir(const std::string& dataset_name) const {
  return datasets_dir / dataset_name;
}

std::filesystem::path RunConfig::checkpoint_path() const {
  const std::string stem = name.empty() ? std::string(to_string(model.variant)) : name;
  return out_dir / "checkpoints" / (stem + ".json");
}

}  // namespace presup
