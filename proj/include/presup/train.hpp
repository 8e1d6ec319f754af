#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "presup/autodiff.hpp"
#include "presup/extract.hpp"
#include "presup/optim.hpp"

namespace presup {

class Model;

struct TrainConfig {
  std::size_t batch_size = 64;
  double dropout = 0.5;
  bool clip = true;
  double clip_lo = -1.0;
  double clip_hi = 1.0;
  std::size_t patience = 10;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;
  AdamConfig adam;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
};

struct TrainResult {
  std::size_t best_epoch = 0;
  double best_dev_accuracy = 0.0;
  bool stopped_early = false;
  std::size_t clamped_probabilities = 0;
  std::vector<EpochRecord> history;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Patience rule on dev accuracy: only a strict improvement resets the
// counter, and the earliest epoch wins ties.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  // Returns true when `dev_accuracy` is a new best.
  bool observe(std::size_t epoch, double dev_accuracy);
  bool should_stop() const noexcept { return last_epoch_ - best_epoch_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best() const noexcept { return best_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  std::size_t last_epoch_ = 0;
  double best_ = -1.0;
};

// Mean cross-entropy -1/m sum log p[label]; probabilities below 1e-12 are
// floored and counted in `clamped`.
ad::Var batch_loss(const std::vector<ad::Var>& probs, const std::vector<int>& labels,
                   std::size_t* clamped = nullptr);
double batch_loss(const std::vector<std::array<double, 2>>& probs, const std::vector<int>& labels,
                  std::size_t* clamped = nullptr);

struct TrainHooks {
  // Replaces the dev-set accuracy computation when set.
  std::function<double(const Model&, std::size_t epoch)> dev_scorer;
  std::function<void(const Model&, const EpochRecord&)> on_epoch_end;
};

// Mini-batch Adam with elementwise gradient clipping and early stopping on
// dev accuracy. On return the model holds the parameters of the best epoch.
TrainResult train(Model& model, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& dev_set, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

}  // namespace presup
