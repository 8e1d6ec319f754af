#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "presup/error.hpp"
#include "presup/models.hpp"
#include "presup/train.hpp"
#include "test_support.hpp"

namespace presup {
namespace {

ModelConfig small_wp() {
  ModelConfig c;
  c.variant = Variant::kWp;
  c.hidden = 4;
  c.embedding_dim = 6;
  c.dense = 8;
  c.pos_mode = PosMode::kOff;
  return c;
}

TrainConfig quick(std::size_t epochs = 3) {
  TrainConfig t;
  t.batch_size = 8;
  t.max_epochs = epochs;
  t.patience = epochs;
  t.seed = 11;
  return t;
}

TEST(BatchLoss, UniformPredictionIsLn2) {
  EXPECT_NEAR(batch_loss({{0.5, 0.5}}, {1}), std::log(2.0), 1e-15);
}

TEST(BatchLoss, PerfectPredictionIsZero) {
  EXPECT_EQ(batch_loss({{0.0, 1.0}}, {1}), 0.0);
}

TEST(BatchLoss, MeanOverBatch) {
  EXPECT_NEAR(batch_loss({{0.5, 0.5}, {0.0, 1.0}}, {0, 1}), 0.346574, 1e-6);
}

TEST(BatchLoss, FloorCountsClamps) {
  std::size_t clamped = 0;
  const double l = batch_loss({{1.0, 0.0}}, {1}, &clamped);
  EXPECT_EQ(clamped, 1u);
  EXPECT_NEAR(l, -std::log(1e-12), 1e-9);
  EXPECT_THROW(batch_loss(std::vector<std::array<double, 2>>{}, {}), UsageError);
}

TEST(BatchLoss, TapeVersionMatchesScalar) {
  ad::Tape tape;
  std::vector<ad::Var> probs{tape.constant(Tensor::vector({0.2, 0.8})),
                             tape.constant(Tensor::vector({0.7, 0.3}))};
  EXPECT_NEAR(batch_loss(probs, {1, 0}).value().item(), batch_loss({{0.2, 0.8}, {0.7, 0.3}}, {1, 0}),
              1e-15);
}

TEST(EarlyStopping, ScriptedSequenceStopsAtTwelve) {
  EarlyStopping es(10);
  const std::vector<double> dev = {0.6, 0.7, 0.7, 0.65, 0.7, 0.69, 0.7, 0.5, 0.7, 0.7, 0.7, 0.7, 0.9};
  std::size_t stopped = 0;
  for (std::size_t e = 1; e <= dev.size(); ++e) {
    es.observe(e, dev[e - 1]);
    if (es.should_stop()) {
      stopped = e;
      break;
    }
  }
  EXPECT_EQ(stopped, 12u);
  EXPECT_EQ(es.best_epoch(), 2u);
  EXPECT_EQ(es.best(), 0.7);
}

TEST(EarlyStopping, TrainLoopHonoursScriptedDevScores) {
  const auto data = testing::tiny_corpus();
  auto m = testing::make_model(small_wp(), data);
  const std::vector<double> dev = {0.6, 0.7, 0.7, 0.7, 0.7, 0.7, 0.7, 0.7, 0.7, 0.7, 0.7, 0.7, 0.9};
  std::vector<ParamStore> snapshots;
  TrainHooks hooks;
  hooks.dev_scorer = [&](const Model& model, std::size_t epoch) {
    snapshots.push_back(model.params());
    return dev.at(epoch - 1);
  };
  TrainConfig tc = quick(100);
  tc.patience = 10;
  const TrainResult r = train(*m, data, {}, tc, hooks);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.history.size(), 12u);
  EXPECT_EQ(r.best_epoch, 2u);
  EXPECT_EQ(r.best_dev_accuracy, 0.7);
  EXPECT_TRUE(m->params() == snapshots.at(1));
  EXPECT_FALSE(m->params() == snapshots.back());
}

TEST(Train, SameSeedIsBitwiseReproducible) {
  const auto data = testing::tiny_corpus();
  auto a = testing::make_model(small_wp(), data, 4);
  auto b = testing::make_model(small_wp(), data, 4);
  const TrainResult ra = train(*a, data, data, quick());
  const TrainResult rb = train(*b, data, data, quick());
  EXPECT_TRUE(a->params() == b->params());
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    EXPECT_EQ(ra.history[i].train_loss, rb.history[i].train_loss);
  }
}

TEST(Train, DifferentSeedChangesTrajectory) {
  const auto data = testing::tiny_corpus();
  auto a = testing::make_model(small_wp(), data, 4);
  auto b = testing::make_model(small_wp(), data, 4);
  TrainConfig other = quick();
  other.seed = 12;
  train(*a, data, data, quick());
  train(*b, data, data, other);
  EXPECT_FALSE(a->params() == b->params());
}

TEST(Train, FrozenWordTableUntouched) {
  const auto data = testing::tiny_corpus();
  auto m = testing::make_model(small_wp(), data);
  const Tensor before = m->params().get("embed.words");
  const Tensor marker = m->params().get("embed.marker");
  train(*m, data, data, quick(2));
  EXPECT_EQ(m->params().get("embed.words"), before);
  EXPECT_FALSE(m->params().get("embed.marker") == marker);
}

TEST(Train, TinyLearningRateGivesSmallUpdate) {
  const auto data = testing::tiny_corpus();
  auto m = testing::make_model(small_wp(), data);
  const ParamStore before = m->params();
  TrainConfig tc = quick(1);
  tc.adam.learning_rate = 1e-9;
  tc.clip = false;
  const TrainResult r = train(*m, data, data, tc);
  ASSERT_EQ(r.best_epoch, 1u);
  const std::size_t steps = (data.size() + tc.batch_size - 1) / tc.batch_size;
  double max_change = 0.0;
  for (const auto& [name, entry] : m->params()) {
    const Tensor& old = before.get(name);
    for (std::size_t i = 0; i < old.size(); ++i)
      max_change = std::max(max_change, std::abs(entry.value[i] - old[i]));
  }
  EXPECT_GT(max_change, 0.0);
  EXPECT_LE(max_change, static_cast<double>(steps) * 1e-9 * 3.2);
}

TEST(Train, NonFiniteLossIsReported) {
  const auto data = testing::tiny_corpus();
  auto m = testing::make_model(small_wp(), data);
  m->params().get("out.b")[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    train(*m, data, data, quick(1));
    FAIL() << "expected NonFiniteLossError";
  } catch (const NonFiniteLossError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig t;
  t.batch_size = 0;
  EXPECT_THROW(t.validate(), UsageError);
  t = {};
  t.dropout = 1.0;
  EXPECT_THROW(t.validate(), UsageError);
  t = {};
  t.clip_lo = 2;
  EXPECT_THROW(t.validate(), UsageError);
  t = {};
  t.patience = 0;
  EXPECT_THROW(t.validate(), UsageError);
  EXPECT_NO_THROW(TrainConfig{}.validate());
}

TEST(Train, EmptyInputsRejected) {
  const auto data = testing::tiny_corpus();
  auto m = testing::make_model(small_wp(), data);
  EXPECT_THROW(train(*m, {}, data, quick()), UsageError);
  EXPECT_THROW(train(*m, data, {}, quick()), UsageError);
}

TEST(Train, MfcIsFittedInOnePass) {
  ModelConfig c;
  c.variant = Variant::kMfc;
  std::vector<Sample> data;
  for (int i = 0; i < 3; ++i) data.push_back(testing::make_sample("none", "a @@@@ b"));
  data.push_back(testing::make_sample("again", "a @@@@ b"));
  auto m = testing::make_model(c, data);
  const TrainResult r = train(*m, data, data, quick());
  EXPECT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.best_dev_accuracy, 0.75);
  EXPECT_EQ(dynamic_cast<MfcModel&>(*m).majority(), 0);
}

}  // namespace
}  // namespace presup
