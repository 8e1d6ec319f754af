#include "presup/commands.hpp"

#include <fstream>
#include <sstream>

#include "presup/checkpoint.hpp"
#include "presup/corpus.hpp"
#include "presup/error.hpp"
#include "presup/sample_io.hpp"

namespace presup {

namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " path is not set");
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string stats_row(const ExtractionStats& s) {
  std::ostringstream os;
  os << s.dataset << '\t' << s.positives << '\t' << s.negatives << '\t' << s.train.positive << '\t'
     << s.train.negative << '\t' << s.dev.positive << '\t' << s.dev.negative << '\t'
     << s.test.positive << '\t' << s.test.negative << '\t' << s.filtered_too << '\t'
     << s.unresolved_governors << '\t' << s.unmatched_governors << '\n';
  return os.str();
}

std::string dataset_id(const std::string& split) {
  const fs::path p(split);
  const std::string parent = p.parent_path().filename().string();
  return parent.empty() ? p.stem().string() : parent + "/" + p.stem().string();
}

std::string model_id(const std::string& checkpoint) { return fs::path(checkpoint).stem().string(); }

std::string file_token(std::string id) {
  for (char& c : id) {
    if (c == '/') c = '_';
  }
  return id;
}

EvalReport evaluate_checkpoint(const LoadedCheckpoint& ck, const std::vector<Sample>& data,
                               const std::string& checkpoint, const std::string& split) {
  EvalReport r = evaluate(*ck.model, data, model_id(checkpoint), dataset_id(split));
  if (ck.meta.contains("best_epoch") && ck.meta.at("best_epoch").is_number_unsigned()) {
    r.best_epoch = ck.meta.at("best_epoch").get<std::size_t>();
  }
  return r;
}

}  // namespace

ExtractSummary cmd_extract(const RunConfig& cfg) {
  require_file(cfg.corpus, "corpus");
  const std::vector<Document> corpus = read_corpus_file(cfg.corpus.string());
  const Rng rng(cfg.sub_seed("extraction"));

  std::vector<std::pair<std::string, std::vector<std::string>>> jobs;
  for (const auto& adverb : cfg.extraction.adverbs) jobs.push_back({adverb, {adverb}});
  jobs.push_back({"all", cfg.extraction.adverbs});

  ExtractSummary summary;
  std::string table =
      "dataset\tpositives\tnegatives\ttrain_pos\ttrain_neg\tdev_pos\tdev_neg\ttest_pos\ttest_neg\t"
      "filtered_too\tunresolved\tunmatched\n";
  for (const auto& [name, adverbs] : jobs) {
    Rng stream = rng.derive(name);
    const Dataset ds = build_dataset(corpus, name, adverbs, cfg.extraction, stream);
    const fs::path dir = cfg.out_dir / "datasets" / name;
    fs::create_directories(dir);
    write_samples((dir / "positives.jsonl").string(), ds.positives);
    write_samples((dir / "negatives.jsonl").string(), ds.negatives);
    write_samples((dir / "train.jsonl").string(), ds.split.train);
    write_samples((dir / "dev.jsonl").string(), ds.split.dev);
    write_samples((dir / "test.jsonl").string(), ds.split.test);
    table += stats_row(ds.stats);
    summary.datasets.push_back(ds.stats);
  }
  summary.stats_file = cfg.stats_dir() / "extraction_stats.tsv";
  write_text(summary.stats_file, table);
  return summary;
}

TrainSummary cmd_train(const RunConfig& cfg) {
  const fs::path dir = cfg.dataset_dir(cfg.dataset);
  require_file(dir / "train.jsonl", "training split");
  require_file(dir / "dev.jsonl", "dev split");
  if (!cfg.embeddings.empty()) require_file(cfg.embeddings, "embeddings");

  const auto train_set = read_samples((dir / "train.jsonl").string());
  const auto dev_set = read_samples((dir / "dev.jsonl").string());
  if (train_set.empty()) throw UsageError("training split is empty: " + (dir / "train.jsonl").string());
  if (dev_set.empty()) throw UsageError("dev split is empty: " + (dir / "dev.jsonl").string());

  Rng init(cfg.sub_seed("init"));
  auto model = create_model(cfg.model, train_set, cfg.embeddings.string(), init);

  TrainSummary summary;
  summary.result = train(*model, train_set, dev_set, cfg.train);

  nlohmann::ordered_json meta;
  meta["dataset"] = cfg.dataset;
  meta["seed"] = cfg.seed;
  meta["best_epoch"] = summary.result.best_epoch;
  meta["best_dev_accuracy"] = summary.result.best_dev_accuracy;
  meta["stopped_early"] = summary.result.stopped_early;
  summary.checkpoint = cfg.checkpoint_path();
  fs::create_directories(summary.checkpoint.parent_path());
  save_checkpoint(*model, summary.checkpoint.string(), meta);

  std::string history;
  for (const auto& e : summary.result.history) {
    nlohmann::ordered_json line;
    line["epoch"] = e.epoch;
    line["train_loss"] = e.train_loss;
    line["dev_accuracy"] = e.dev_accuracy;
    history += line.dump() + "\n";
  }
  summary.history = cfg.reports_dir() / (summary.checkpoint.stem().string() + "_history.jsonl");
  write_text(summary.history, history);
  return summary;
}

nlohmann::ordered_json eval_report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["dataset"] = r.dataset;
  j["samples"] = r.confusion.total();
  j["accuracy"] = r.accuracy;
  j["confusion"] = {{"rows", "actual"},
                    {"cols", "predicted"},
                    {"labels", {"absence", "presence"}},
                    {"matrix", {{r.confusion.tn, r.confusion.fp}, {r.confusion.fn, r.confusion.tp}}}};
  j["tn"] = r.confusion.tn;
  j["fp"] = r.confusion.fp;
  j["fn"] = r.confusion.fn;
  j["tp"] = r.confusion.tp;
  j["positives"] = r.positives;
  j["negatives"] = r.negatives;
  j["best_epoch"] = r.best_epoch ? nlohmann::ordered_json(*r.best_epoch) : nlohmann::ordered_json();
  return j;
}

EvalSummary cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const std::string& split) {
  require_file(checkpoint, "checkpoint");
  require_file(split, "split");
  const LoadedCheckpoint ck = load_checkpoint(checkpoint);
  const auto data = read_samples(split);
  if (data.empty()) throw UsageError("split is empty: " + split);

  EvalSummary s;
  s.report = evaluate_checkpoint(ck, data, checkpoint, split);
  s.report_file = cfg.reports_dir() /
                  ("eval_" + s.report.model + "_" + file_token(s.report.dataset) + ".json");
  write_text(s.report_file, eval_report_json(s.report).dump(2) + "\n");
  return s;
}

nlohmann::ordered_json compare_report_json(const CompareSummary& s, double alpha) {
  nlohmann::ordered_json j;
  j["model_a"] = s.a.model;
  j["model_b"] = s.b.model;
  j["dataset"] = s.a.dataset;
  j["samples"] = s.table.total();
  j["accuracy_a"] = s.a.accuracy;
  j["accuracy_b"] = s.b.accuracy;
  j["contingency"] = {{"a_both_correct", s.table.a},
                      {"b_a_correct_b_wrong", s.table.b},
                      {"c_a_wrong_b_correct", s.table.c},
                      {"d_both_wrong", s.table.d}};
  j["mcnemar"] = {{"chi2", s.test.chi2},
                  {"p", s.test.p},
                  {"degenerate", s.test.degenerate},
                  {"alpha", alpha},
                  {"verdict", s.test.significant(alpha) ? "significant" : "not significant"}};
  return j;
}

CompareSummary cmd_compare(const RunConfig& cfg, const std::string& checkpoint_a,
                           const std::string& checkpoint_b, const std::string& split) {
  require_file(checkpoint_a, "checkpoint");
  require_file(checkpoint_b, "checkpoint");
  require_file(split, "split");
  const LoadedCheckpoint a = load_checkpoint(checkpoint_a);
  const LoadedCheckpoint b = load_checkpoint(checkpoint_b);
  const std::string da = a.meta.value("dataset", "");
  const std::string db = b.meta.value("dataset", "");
  if (!da.empty() && !db.empty() && da != db) {
    throw UsageError("checkpoints were trained on different datasets ('" + da + "' vs '" + db + "')");
  }
  const auto data = read_samples(split);
  if (data.empty()) throw UsageError("split is empty: " + split);

  CompareSummary s;
  s.a = evaluate_checkpoint(a, data, checkpoint_a, split);
  s.b = evaluate_checkpoint(b, data, checkpoint_b, split);
  s.table = contingency(s.a.predictions, s.b.predictions, s.a.labels);
  s.test = mcnemar(s.table);
  s.report_file = cfg.reports_dir() / ("compare_" + s.a.model + "_vs_" + s.b.model + "_" +
                                       file_token(s.a.dataset) + ".json");
  write_text(s.report_file, compare_report_json(s).dump(2) + "\n");
  return s;
}

}  // namespace presup
