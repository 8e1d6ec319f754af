#include "presup/presup.h"

#include <exception>
#include <string>

#include "presup/checkpoint.hpp"
#include "presup/commands.hpp"
#include "presup/error.hpp"
#include "presup/sample_io.hpp"

struct presup_config {
  nlohmann::json doc;
};

struct presup_model {
  presup::LoadedCheckpoint checkpoint;
};

struct presup_samples {
  std::vector<presup::Sample> samples;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_path;

presup_status fail(presup_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
presup_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return PRESUP_OK;
  } catch (const presup::UsageError& e) {
    return fail(PRESUP_ERR_USAGE, e.what());
  } catch (const std::exception& e) {
    return fail(PRESUP_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(PRESUP_ERR_RUNTIME, "unknown error");
  }
}

const char* keep_path(const std::filesystem::path& p) {
  g_last_path = p.string();
  return g_last_path.c_str();
}

}  // namespace

extern "C" {

const char* presup_last_error(void) { return g_last_error.c_str(); }

const char* presup_version(void) { return "1.0.0"; }

presup_status presup_config_load(const char* path, presup_config** out) {
  if (out == nullptr) return fail(PRESUP_ERR_USAGE, "presup_config_load: out is NULL");
  *out = nullptr;
  return guarded([&] {
    auto cfg = std::make_unique<presup_config>();
    cfg->doc = presup::RunConfig::load_document(path ? path : "");
    *out = cfg.release();
  });
}

void presup_config_free(presup_config* config) { delete config; }

presup_status presup_config_set(presup_config* config, const char* assignment) {
  if (config == nullptr || assignment == nullptr) {
    return fail(PRESUP_ERR_USAGE, "presup_config_set: NULL argument");
  }
  return guarded([&] { presup::RunConfig::apply_override(config->doc, assignment); });
}

presup_status presup_config_set_seed(presup_config* config, uint64_t seed) {
  if (config == nullptr) return fail(PRESUP_ERR_USAGE, "presup_config_set_seed: NULL config");
  config->doc["seed"] = seed;
  return PRESUP_OK;
}

presup_status presup_config_set_out(presup_config* config, const char* dir) {
  if (config == nullptr || dir == nullptr) {
    return fail(PRESUP_ERR_USAGE, "presup_config_set_out: NULL argument");
  }
  config->doc["out"] = std::string(dir);
  return PRESUP_OK;
}

presup_status presup_config_dump(const presup_config* config, char* buf, size_t size,
                                 size_t* needed) {
  if (config == nullptr) return fail(PRESUP_ERR_USAGE, "presup_config_dump: NULL config");
  const std::string text = config->doc.dump(2);
  if (needed) *needed = text.size() + 1;
  if (buf == nullptr || size == 0) return PRESUP_OK;
  if (size < text.size() + 1) return fail(PRESUP_ERR_USAGE, "presup_config_dump: buffer too small");
  text.copy(buf, text.size());
  buf[text.size()] = '\0';
  return PRESUP_OK;
}

presup_status presup_extract(const presup_config* config, size_t* datasets, const char** stats_path) {
  if (config == nullptr) return fail(PRESUP_ERR_USAGE, "presup_extract: NULL config");
  return guarded([&] {
    const auto summary = presup::cmd_extract(presup::RunConfig::from_document(config->doc));
    if (datasets) *datasets = summary.datasets.size();
    if (stats_path) *stats_path = keep_path(summary.stats_file);
  });
}

presup_status presup_train(const presup_config* config, double* best_dev_accuracy,
                           size_t* best_epoch, const char** checkpoint_path) {
  if (config == nullptr) return fail(PRESUP_ERR_USAGE, "presup_train: NULL config");
  return guarded([&] {
    const auto summary = presup::cmd_train(presup::RunConfig::from_document(config->doc));
    if (best_dev_accuracy) *best_dev_accuracy = summary.result.best_dev_accuracy;
    if (best_epoch) *best_epoch = summary.result.best_epoch;
    if (checkpoint_path) *checkpoint_path = keep_path(summary.checkpoint);
  });
}

presup_status presup_eval(const presup_config* config, const char* checkpoint, const char* split,
                          double* accuracy, const char** report_path) {
  if (config == nullptr || checkpoint == nullptr || split == nullptr) {
    return fail(PRESUP_ERR_USAGE, "presup_eval: NULL argument");
  }
  return guarded([&] {
    const auto s = presup::cmd_eval(presup::RunConfig::from_document(config->doc), checkpoint, split);
    if (accuracy) *accuracy = s.report.accuracy;
    if (report_path) *report_path = keep_path(s.report_file);
  });
}

presup_status presup_compare(const presup_config* config, const char* checkpoint_a,
                             const char* checkpoint_b, const char* split, double* chi2, double* p,
                             int* significant, const char** report_path) {
  if (config == nullptr || checkpoint_a == nullptr || checkpoint_b == nullptr || split == nullptr) {
    return fail(PRESUP_ERR_USAGE, "presup_compare: NULL argument");
  }
  return guarded([&] {
    const auto s = presup::cmd_compare(presup::RunConfig::from_document(config->doc), checkpoint_a,
                                       checkpoint_b, split);
    if (chi2) *chi2 = s.test.chi2;
    if (p) *p = s.test.p;
    if (significant) *significant = s.test.significant() ? 1 : 0;
    if (report_path) *report_path = keep_path(s.report_file);
  });
}

presup_status presup_model_load(const char* checkpoint, presup_model** out) {
  if (checkpoint == nullptr || out == nullptr) {
    return fail(PRESUP_ERR_USAGE, "presup_model_load: NULL argument");
  }
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<presup_model>();
    m->checkpoint = presup::load_checkpoint(checkpoint);
    *out = m.release();
  });
}

void presup_model_free(presup_model* model) { delete model; }

size_t presup_model_param_count(const presup_model* model) {
  return model ? model->checkpoint.model->params().param_count() : 0;
}

presup_status presup_samples_read(const char* path, presup_samples** out) {
  if (path == nullptr || out == nullptr) {
    return fail(PRESUP_ERR_USAGE, "presup_samples_read: NULL argument");
  }
  *out = nullptr;
  return guarded([&] {
    auto s = std::make_unique<presup_samples>();
    s->samples = presup::read_samples(std::string(path));
    *out = s.release();
  });
}

void presup_samples_free(presup_samples* samples) { delete samples; }

size_t presup_samples_count(const presup_samples* samples) {
  return samples ? samples->samples.size() : 0;
}

presup_status presup_model_predict(const presup_model* model, const presup_samples* samples,
                                   int* predictions, size_t capacity) {
  if (model == nullptr || samples == nullptr || predictions == nullptr) {
    return fail(PRESUP_ERR_USAGE, "presup_model_predict: NULL argument");
  }
  if (capacity < samples->samples.size()) {
    return fail(PRESUP_ERR_USAGE, "presup_model_predict: capacity smaller than sample count");
  }
  return guarded([&] {
    const presup::Model& m = *model->checkpoint.model;
    for (std::size_t i = 0; i < samples->samples.size(); ++i) {
      predictions[i] = m.predict(m.encode(samples->samples[i]));
    }
  });
}

presup_status presup_mcnemar(uint64_t b, uint64_t c, double* chi2, double* p) {
  return guarded([&] {
    const auto r = presup::mcnemar(presup::ContingencyTable{0, b, c, 0});
    if (chi2) *chi2 = r.chi2;
    if (p) *p = r.p;
  });
}

}  // extern "C"
