#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "presup/presup.h"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "Run configuration (JSON)");
  cmd->add_option("--seed", opts.seed, "Global seed");
  cmd->add_option("--out", opts.out, "Output directory");
  cmd->add_option("--set", opts.overrides, "Override a config leaf, key=value (repeatable)");
}

using ConfigPtr = std::unique_ptr<presup_config, decltype(&presup_config_free)>;

int report(presup_status status) {
  if (status != PRESUP_OK) std::fprintf(stderr, "error: %s\n", presup_last_error());
  return static_cast<int>(status);
}

presup_status load_config(const CommonOptions& opts, ConfigPtr& out) {
  presup_config* raw = nullptr;
  presup_status st = presup_config_load(opts.config.empty() ? nullptr : opts.config.c_str(), &raw);
  if (st != PRESUP_OK) return st;
  out.reset(raw);
  for (const auto& kv : opts.overrides) {
    if ((st = presup_config_set(raw, kv.c_str())) != PRESUP_OK) return st;
  }
  if (opts.seed && (st = presup_config_set_seed(raw, *opts.seed)) != PRESUP_OK) return st;
  if (!opts.out.empty() && (st = presup_config_set_out(raw, opts.out.c_str())) != PRESUP_OK) return st;
  return PRESUP_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adverbial presupposition trigger detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(presup_version()));

  CommonOptions opts;
  std::string checkpoint, checkpoint_b, split;

  auto* extract = app.add_subcommand("extract", "Build datasets from an annotated corpus");
  add_common(extract, opts);

  auto* train = app.add_subcommand("train", "Train a model and write its best checkpoint");
  add_common(train, opts);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  add_common(eval, opts);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--split", split, "Sample file (JSONL)")->required();

  auto* compare = app.add_subcommand("compare", "McNemar comparison of two checkpoints");
  add_common(compare, opts);
  compare->add_option("--a", checkpoint, "Checkpoint A")->required();
  compare->add_option("--b", checkpoint_b, "Checkpoint B")->required();
  compare->add_option("--split", split, "Sample file (JSONL)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return PRESUP_ERR_USAGE;
  }

  ConfigPtr config(nullptr, &presup_config_free);
  if (const presup_status st = load_config(opts, config); st != PRESUP_OK) return report(st);

  if (extract->parsed()) {
    size_t datasets = 0;
    const char* stats = nullptr;
    const presup_status st = presup_extract(config.get(), &datasets, &stats);
    if (st == PRESUP_OK) std::printf("extracted %zu datasets; stats: %s\n", datasets, stats);
    return report(st);
  }
  if (train->parsed()) {
    double acc = 0.0;
    size_t epoch = 0;
    const char* path = nullptr;
    const presup_status st = presup_train(config.get(), &acc, &epoch, &path);
    if (st == PRESUP_OK) {
      std::printf("best dev accuracy %.6f at epoch %zu; checkpoint: %s\n", acc, epoch, path);
    }
    return report(st);
  }
  if (eval->parsed()) {
    double acc = 0.0;
    const char* path = nullptr;
    const presup_status st = presup_eval(config.get(), checkpoint.c_str(), split.c_str(), &acc, &path);
    if (st == PRESUP_OK) std::printf("accuracy %.6f; report: %s\n", acc, path);
    return report(st);
  }
  double chi2 = 0.0, p = 1.0;
  int significant = 0;
  const char* path = nullptr;
  const presup_status st = presup_compare(config.get(), checkpoint.c_str(), checkpoint_b.c_str(),
                                          split.c_str(), &chi2, &p, &significant, &path);
  if (st == PRESUP_OK) {
    std::printf("chi2 %.6f p %.6g: %s; report: %s\n", chi2, p,
                significant ? "significant" : "not significant", path);
  }
  return report(st);
}
