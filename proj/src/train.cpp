#include "presup/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "presup/error.hpp"
#include "presup/metrics.hpp"
#include "presup/models.hpp"

namespace presup {

namespace {
constexpr double kProbFloor = 1e-12;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw UsageError("train: batch_size must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("train: dropout must be in [0, 1)");
  if (patience < 1) throw UsageError("train: patience must be >= 1");
  if (max_epochs < 1) throw UsageError("train: max_epochs must be >= 1");
  if (clip && clip_lo > clip_hi) throw UsageError("train: clip_lo > clip_hi");
  if (!(adam.learning_rate >= 0.0)) throw UsageError("train: learning rate must be >= 0");
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience < 1) throw UsageError("early stopping: patience must be >= 1");
}

bool EarlyStopping::observe(std::size_t epoch, double dev_accuracy) {
  last_epoch_ = epoch;
  if (dev_accuracy > best_) {
    best_ = dev_accuracy;
    best_epoch_ = epoch;
    return true;
  }
  return false;
}

ad::Var batch_loss(const std::vector<ad::Var>& probs, const std::vector<int>& labels,
                   std::size_t* clamped) {
  if (probs.empty() || probs.size() != labels.size()) {
    throw UsageError("batch_loss: need one label per prediction");
  }
  ad::Var total;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto label = static_cast<std::size_t>(labels[i]);
    if (clamped && probs[i].value()[label] <= kProbFloor) ++*clamped;
    ad::Var l = ad::nll(probs[i], label, kProbFloor);
    total = i == 0 ? l : ad::add(total, l);
  }
  return ad::scale(total, 1.0 / static_cast<double>(probs.size()));
}

double batch_loss(const std::vector<std::array<double, 2>>& probs, const std::vector<int>& labels,
                  std::size_t* clamped) {
  if (probs.empty() || probs.size() != labels.size()) {
    throw UsageError("batch_loss: need one label per prediction");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i].at(static_cast<std::size_t>(labels[i]));
    if (p <= kProbFloor && clamped) ++*clamped;
    total += -std::log(std::max(p, kProbFloor));
  }
  return total / static_cast<double>(probs.size());
}

TrainResult train(Model& model, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& dev_set, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (train_set.empty()) throw UsageError("train: empty training set");
  if (dev_set.empty() && !hooks.dev_scorer) throw UsageError("train: empty development set");

  const std::vector<EncodedSample> enc_train = model.encode_all(train_set);
  const std::vector<EncodedSample> enc_dev = model.encode_all(dev_set);
  std::vector<int> dev_labels;
  for (const auto& e : enc_dev) dev_labels.push_back(e.label);

  auto dev_accuracy = [&](std::size_t epoch) {
    if (hooks.dev_scorer) return hooks.dev_scorer(model, epoch);
    std::vector<int> preds;
    preds.reserve(enc_dev.size());
    for (const auto& e : enc_dev) preds.push_back(model.predict(e));
    return accuracy(preds, dev_labels);
  };

  TrainResult result;
  if (!model.gradient_trained()) {
    model.fit(enc_train);
    EpochRecord rec{1, 0.0, dev_accuracy(1)};
    std::vector<std::array<double, 2>> probs;
    std::vector<int> labels;
    for (const auto& e : enc_train) {
      probs.push_back(model.predict_proba(e));
      labels.push_back(e.label);
    }
    rec.train_loss = batch_loss(probs, labels, &result.clamped_probabilities);
    result.history.push_back(rec);
    result.best_epoch = 1;
    result.best_dev_accuracy = rec.dev_accuracy;
    if (hooks.on_epoch_end) hooks.on_epoch_end(model, rec);
    return result;
  }

  const Rng root(cfg.seed);
  Rng shuffler = root.derive("shuffle");
  Rng dropout_rng = root.derive("dropout");
  AdamState adam{cfg.adam, {}, {}, 0};
  EarlyStopping stopper(cfg.patience);
  ParamStore best = model.params();

  std::vector<std::size_t> order(enc_train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const ForwardContext ctx{Mode::kTrain, cfg.dropout, &dropout_rng};

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      ad::Tape tape;
      std::vector<ad::Var> probs;
      std::vector<int> labels;
      probs.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const EncodedSample& e = enc_train[order[k]];
        probs.push_back(model.forward(tape, e, ctx));
        labels.push_back(e.label);
      }
      ad::Var data_loss = batch_loss(probs, labels, &result.clamped_probabilities);
      ad::Var loss = data_loss;
      if (auto pen = model.penalty(tape)) loss = ad::add(loss, *pen);
      const double lv = loss.value().item();
      if (!std::isfinite(lv)) {
        std::ostringstream msg;
        msg << "non-finite loss " << lv << " at epoch " << epoch << ", batch samples [";
        for (std::size_t k = start; k < end; ++k) msg << (k > start ? "," : "") << order[k];
        msg << "]";
        for (std::size_t k = start; k < end; ++k) {
          const Tensor& p = probs[k - start].value();
          msg << "\n  sample " << order[k] << " label=" << labels[k - start] << " p=[" << p[0]
              << "," << p[1] << "]";
        }
        throw NonFiniteLossError(msg.str());
      }
      loss_sum += data_loss.value().item() * static_cast<double>(end - start);
      tape.backward(loss);
      Gradients grads = tape.gradients(model.params());
      if (cfg.clip) clip_gradients(grads, cfg.clip_lo, cfg.clip_hi);
      adam_step(model.params(), grads, adam);
    }

    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), dev_accuracy(epoch)};
    if (stopper.observe(epoch, rec.dev_accuracy)) best = model.params();
    result.history.push_back(rec);
    if (hooks.on_epoch_end) hooks.on_epoch_end(model, rec);
    if (stopper.should_stop()) {
      result.stopped_early = true;
      break;
    }
  }
  model.params() = best;
  result.best_epoch = stopper.best_epoch();
  result.best_dev_accuracy = stopper.best();
  return result;
}

}  // namespace presup
