#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "presup/metrics.hpp"
#include "presup/run_config.hpp"

namespace presup {

struct ExtractSummary {
  std::vector<ExtractionStats> datasets;
  std::filesystem::path stats_file;
};

// One dataset per configured adverb plus the combined "all" dataset, each
// written to datasets/<name>/{positives,negatives,train,dev,test}.jsonl.
ExtractSummary cmd_extract(const RunConfig& cfg);

struct TrainSummary {
  TrainResult result;
  std::filesystem::path checkpoint;
  std::filesystem::path history;
};

TrainSummary cmd_train(const RunConfig& cfg);

struct EvalSummary {
  EvalReport report;
  std::filesystem::path report_file;
};

EvalSummary cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const std::string& split);

struct CompareSummary {
  EvalReport a;
  EvalReport b;
  ContingencyTable table;
  McNemarResult test;
  std::filesystem::path report_file;
};

CompareSummary cmd_compare(const RunConfig& cfg, const std::string& checkpoint_a,
                           const std::string& checkpoint_b, const std::string& split);

// Report documents; field names and order are fixed.
nlohmann::ordered_json eval_report_json(const EvalReport& report);
nlohmann::ordered_json compare_report_json(const CompareSummary& summary, double alpha = 0.05);

}  // namespace presup
