#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "presup/extract.hpp"

namespace presup {

class Model;

// Rows are the actual class, columns the predicted class; class 1 is
// "presence" of a trigger.
struct ConfusionMatrix {
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tp = 0;

  std::uint64_t total() const noexcept { return tn + fp + fn + tp; }
  double accuracy() const;

  static ConfusionMatrix from(const std::vector<int>& predictions, const std::vector<int>& labels);
};

// a: both correct, b: A correct / B wrong, c: A wrong / B correct, d: both wrong.
struct ContingencyTable {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t c = 0;
  std::uint64_t d = 0;

  std::uint64_t total() const noexcept { return a + b + c + d; }
};

struct McNemarResult {
  double chi2 = 0.0;
  double p = 1.0;
  bool degenerate = false;  // b + c == 0

  bool significant(double alpha = 0.05) const { return p < alpha; }
};

struct EvalReport {
  std::string model;
  std::string dataset;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::optional<std::size_t> best_epoch;
  std::vector<int> predictions;
  std::vector<int> labels;
};

// Fraction of positions where prediction equals label.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

EvalReport evaluate(const Model& model, const std::vector<Sample>& data,
                    const std::string& model_id = "", const std::string& dataset_id = "");

ContingencyTable contingency(const std::vector<int>& predictions_a,
                             const std::vector<int>& predictions_b,
                             const std::vector<int>& labels);

// Continuity-corrected McNemar: chi2 = (|b - c| - 1)^2 / (b + c), p from the
// chi-square(1) survival function erfc(sqrt(chi2 / 2)).
McNemarResult mcnemar(const ContingencyTable& table);

}  // namespace presup
