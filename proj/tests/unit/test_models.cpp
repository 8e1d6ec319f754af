#include <cmath>

#include <gtest/gtest.h>

#include "presup/error.hpp"
#include "presup/models.hpp"
#include "presup/train.hpp"
#include "test_support.hpp"

namespace presup {
namespace {

ModelConfig recurrent(Variant v, std::size_t s = 4, std::size_t d = 6, PosMode pos = PosMode::kOff) {
  ModelConfig c;
  c.variant = v;
  c.hidden = s;
  c.embedding_dim = d;
  c.pos_mode = pos;
  c.dense = 8;
  return c;
}

RecurrentModel& as_recurrent(Model& m) { return dynamic_cast<RecurrentModel&>(m); }

TEST(ModelConfig, ValidateAndJsonRoundTrip) {
  ModelConfig c;
  c.variant = Variant::kCnn;
  c.cnn_widths = {2, 3};
  c.activation = Activation::kTanh;
  EXPECT_EQ(to_json(model_config_from_json(nlohmann::json::parse(to_json(c).dump()))).dump(),
            to_json(c).dump());
  ModelConfig bad;
  bad.hidden = 0;
  EXPECT_THROW(bad.validate(), UsageError);
  EXPECT_THROW(parse_variant("rnn"), UsageError);
  EXPECT_EQ(parse_pos_mode("one_hot"), PosMode::kOneHot);
}

TEST(Embedding, OneHotRowsHaveWordPlusTagWidth) {
  const auto data = testing::tiny_corpus();
  ModelConfig c = recurrent(Variant::kWp, 4, 3, PosMode::kOneHot);
  auto m = testing::make_model(c, data);
  const EncodedSample e = m->encode(data[1]);
  ad::Tape tape;
  ad::Var x = embed_sequence(tape, m->params(), m->config(), m->vocab(), e);
  EXPECT_EQ(x.shape(), (Shape{e.length(), 3 + m->vocab().pos_size()}));
  for (std::size_t t = 0; t < e.length(); ++t) EXPECT_EQ(x.value().at(t, 3 + e.pos[t]), 1.0);
}

TEST(Embedding, PosOffAndLearnedWidths) {
  const auto data = testing::tiny_corpus();
  auto off = testing::make_model(recurrent(Variant::kWp, 4, 3, PosMode::kOff), data);
  auto learned = testing::make_model(recurrent(Variant::kWp, 4, 3, PosMode::kLearned), data);
  ad::Tape t1, t2;
  EXPECT_EQ(embed_sequence(t1, off->params(), off->config(), off->vocab(), off->encode(data[1])).shape()[1], 3u);
  EXPECT_EQ(embed_sequence(t2, learned->params(), learned->config(), learned->vocab(),
                           learned->encode(data[1])).shape()[1], 43u);
}

TEST(Embedding, MarkerUsesReservedRow) {
  const auto data = testing::tiny_corpus();
  auto m = testing::make_model(recurrent(Variant::kWp), data);
  const EncodedSample e = m->encode(data[0]);
  ad::Tape tape;
  const Tensor x = embed_sequence(tape, m->params(), m->config(), m->vocab(), e).value();
  const Tensor& table = m->params().get("embed.words");
  const Tensor& marker = m->params().get("embed.marker");
  EXPECT_EQ(e.tokens[e.marker], m->vocab().marker_id());
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(x.at(e.marker, j), table.at(m->vocab().marker_id(), j) + marker.at(0, j));
  }
  EXPECT_FALSE(m->params().entry("embed.words").trainable);
}

TEST(BiLstm, ZeroParametersGiveZeroStates) {
  ParamStore p;
  Rng rng(1);
  add_bilstm_params(p, 3, 2, rng);
  for (const auto& n : p.names()) for (double& x : p.get(n).data()) x = 0.0;
  ad::Tape tape;
  ad::Var h = bilstm_forward(tape, p, tape.constant(Tensor::matrix({{1, 2, 3}, {-1, 0, 4}})));
  EXPECT_EQ(h.value(), Tensor(Shape{4, 2}));
}

TEST(BiLstm, SingleStepShape) {
  ParamStore p;
  Rng rng(1);
  add_bilstm_params(p, 3, 5, rng);
  ad::Tape tape;
  EXPECT_EQ(bilstm_forward(tape, p, tape.constant(Tensor::matrix({{1, 2, 3}}))).shape(), (Shape{10, 1}));
}

TEST(BiLstm, ParamCountFormula) {
  for (std::size_t n : {1u, 6u, 40u}) {
    for (std::size_t s : {1u, 4u, 16u}) {
      ParamStore p;
      Rng rng(1);
      add_bilstm_params(p, n, s, rng);
      EXPECT_EQ(p.param_count(), 2 * 4 * (s * (n + s) + s));
    }
  }
}

TEST(BiLstm, ReversalSwapsDirectionsWhenWeightsShared) {
  ParamStore p;
  Rng rng(3);
  add_bilstm_params(p, 3, 4, rng);
  for (const char* w : {".W_x", ".W_h", ".b"}) p.get(std::string("lstm.bw") + w) = p.get(std::string("lstm.fw") + w);
  const Tensor x = Tensor::matrix({{0.1, -0.5, 0.3}, {0.9, 0.2, -0.1}, {-0.3, 0.4, 0.8}, {0.0, 0.6, -0.7}});
  Tensor xr(Shape{4, 3});
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t j = 0; j < 3; ++j) xr.at(t, j) = x.at(3 - t, j);
  ad::Tape tape;
  const Tensor h = bilstm_forward(tape, p, tape.constant(x)).value();
  const Tensor hr = bilstm_forward(tape, p, tape.constant(xr)).value();
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_DOUBLE_EQ(hr.at(k, 3 - t), h.at(4 + k, t));
      EXPECT_DOUBLE_EQ(hr.at(4 + k, 3 - t), h.at(k, t));
    }
  }
}

TEST(Attention, IdenticalStatesGiveUniformWeights) {
  ad::Tape tape;
  ad::Var h = tape.constant(Tensor::matrix({{0.3, 0.3, 0.3, 0.3}, {-1, -1, -1, -1}}));
  const Tensor a = attention_weights(h).alpha.value();
  for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(a[t], 0.25, 1e-15);
}

TEST(Attention, SingleStepIsOne) {
  ad::Tape tape;
  EXPECT_EQ(attention_weights(tape.constant(Tensor::matrix({{0.4}, {2.0}}))).alpha.value(),
            Tensor::vector({1.0}));
}

TEST(Attention, DualFormulaAgrees) {
  ad::Tape tape;
  const Tensor hv = Tensor::matrix({{0.5, -1.2, 0.3}, {0.8, 0.1, -0.4}, {-0.6, 0.9, 1.1}, {0.2, 0.2, -0.9}});
  const AttentionVars a = attention_weights(tape.constant(hv));
  const Tensor row_t = kernels::matmul(kernels::transpose(a.m_row.value()), a.beta.value());
  double sum = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_NEAR(a.alpha.value()[t], row_t[t], 1e-12);
    sum += a.alpha.value()[t];
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Attention, BetaIsColumnMeanOfRowSoftmax) {
  ad::Tape tape;
  const AttentionVars a = attention_weights(tape.constant(Tensor::matrix({{1, 0, 2}, {0, 1, -1}})));
  const Tensor& r = a.m_row.value();
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(a.beta.value()[j], (r.at(0, j) + r.at(1, j) + r.at(2, j)) / 3.0, 1e-15);
  }
}

TEST(WeightedPool, Examples) {
  ad::Tape tape;
  ad::Var h = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  EXPECT_EQ(weighted_pool(h, tape.constant(Tensor::vector({0.25, 0.75}))).value(), Tensor::vector({0.25, 0.75}));
  ad::Var h3 = tape.constant(Tensor::matrix({{1, 2, 3}, {4, 5, 6}}));
  EXPECT_EQ(weighted_pool(h3, tape.constant(Tensor::vector({0, 1, 0}))).value(), Tensor::vector({2, 5}));
  const Tensor mean = kernels::mean_axis(h3.value(), Axis::kCols);
  const Tensor pooled = weighted_pool(h3, tape.constant(Tensor::vector({1.0 / 3, 1.0 / 3, 1.0 / 3}))).value();
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(pooled[i], mean[i], 1e-15);
}

TEST(Recurrent, ZeroParametersGiveHalf) {
  const auto data = testing::tiny_corpus();
  for (Variant v : {Variant::kWp, Variant::kLstm}) {
    auto m = testing::make_model(recurrent(v), data);
    testing::zero_params(*m);
    const auto p = m->predict_proba(m->encode(data[3]));
    EXPECT_EQ(p[0], 0.5);
    EXPECT_EQ(p[1], 0.5);
  }
}

TEST(Recurrent, EvalIsDeterministicTrainModeUsesDropout) {
  const auto data = testing::tiny_corpus();
  auto m = testing::make_model(recurrent(Variant::kWp), data);
  const EncodedSample e = m->encode(data[2]);
  EXPECT_EQ(m->predict_proba(e), m->predict_proba(e));
  Rng a(1), b(1);
  auto run = [&](Rng& rng) {
    ad::Tape tape;
    return m->forward(tape, e, ForwardContext{Mode::kTrain, 0.5, &rng}).value();
  };
  const Tensor ya = run(a);
  EXPECT_EQ(ya, run(b));
  ad::Tape tape;
  EXPECT_THROW(m->forward(tape, e, ForwardContext{Mode::kTrain, 0.5, nullptr}), UsageError);
}

TEST(Recurrent, TraceInvariants) {
  const auto data = testing::tiny_corpus(17, 4, 20, 9);
  auto m = testing::make_model(recurrent(Variant::kWp, 4, 6, PosMode::kLearned), data);
  const ForwardTrace tr = as_recurrent(*m).trace(m->encode(data[5]));
  const std::size_t T = tr.alpha.size();
  ASSERT_EQ(tr.h.shape(), (Shape{8, T}));
  ASSERT_EQ(tr.m.shape(), (Shape{T, T}));
  double asum = 0;
  for (std::size_t i = 0; i < T; ++i) {
    double row = 0, col = 0;
    for (std::size_t j = 0; j < T; ++j) {
      EXPECT_EQ(tr.m.at(i, j), tr.m.at(j, i));
      row += tr.m_row.at(i, j);
      col += tr.m_col.at(j, i);
    }
    EXPECT_NEAR(row, 1.0, 1e-9);
    EXPECT_NEAR(col, 1.0, 1e-9);
    EXPECT_GE(tr.alpha[i], 0.0);
    EXPECT_NEAR(tr.alpha[i], tr.alpha_rowT[i], 1e-10);
    asum += tr.alpha[i];
  }
  EXPECT_NEAR(asum, 1.0, 1e-9);
  EXPECT_NEAR(tr.y[0] + tr.y[1], 1.0, 1e-9);
  EXPECT_EQ(tr.c.size(), 8u);
  EXPECT_EQ(tr.z.size(), 8u);
}

TEST(Recurrent, UniformAlphaReproducesBaseline) {
  const auto data = testing::tiny_corpus();
  auto wp = testing::make_model(recurrent(Variant::kWp), data, 5);
  auto lstm = testing::make_model(recurrent(Variant::kLstm), data, 5);
  ASSERT_TRUE(wp->params() == lstm->params());
  for (std::size_t i = 0; i < 10; ++i) {
    const EncodedSample e = wp->encode(data[i]);
    ad::Tape t1, t2;
    const Tensor a = as_recurrent(*wp).forward_traced(t1, e, {}, nullptr, true).value();
    const Tensor b = lstm->forward(t2, e, {}).value();
    EXPECT_EQ(a, b);
  }
}

TEST(Recurrent, ParamCountMatchesBaseline) {
  const auto data = testing::tiny_corpus();
  for (std::size_t s : {4u, 16u}) {
    auto wp = testing::make_model(recurrent(Variant::kWp, s), data);
    auto lstm = testing::make_model(recurrent(Variant::kLstm, s), data);
    EXPECT_EQ(wp->params().param_count(), lstm->params().param_count());
  }
}

ModelConfig cnn_config() {
  ModelConfig c;
  c.variant = Variant::kCnn;
  c.embedding_dim = 5;
  c.pos_mode = PosMode::kOff;
  return c;
}

TEST(Cnn, PooledLengthIsThreeHundred) {
  const auto data = testing::tiny_corpus();
  auto m = testing::make_model(cnn_config(), data);
  auto& cnn = dynamic_cast<CnnModel&>(*m);
  ad::Tape tape;
  ad::Var pooled;
  cnn.forward_embedded(tape, tape.constant(Tensor(Shape{7, 5}, 0.1)), {}, nullptr, &pooled);
  EXPECT_EQ(pooled.shape(), (Shape{300}));
}

TEST(Cnn, ZeroInputGivesBiasLogits) {
  const auto data = testing::tiny_corpus();
  auto m = testing::make_model(cnn_config(), data);
  m->params().get("out.b") = Tensor::vector({0.3, -0.2});
  auto& cnn = dynamic_cast<CnnModel&>(*m);
  ad::Tape tape;
  ad::Var logits;
  cnn.forward_embedded(tape, tape.constant(Tensor(Shape{10, 5})), {}, &logits);
  EXPECT_EQ(logits.value(), Tensor::vector({0.3, -0.2}));
}

TEST(Cnn, MaxOverTimeIsShiftInvariant) {
  const auto data = testing::tiny_corpus();
  auto m = testing::make_model(cnn_config(), data);
  for (const char* b : {"cnn.w3.b", "cnn.w4.b", "cnn.w5.b"}) {
    for (double& x : m->params().get(b).data()) x = -1.0;  // padding windows stay at zero
  }
  auto& cnn = dynamic_cast<CnnModel&>(*m);
  auto pooled_at = [&](std::size_t offset) {
    Tensor x(Shape{20, 5});
    for (std::size_t j = 0; j < 5; ++j) {
      x.at(offset, j) = 3.0 + j;
      x.at(offset + 1, j) = -2.0 * j;
    }
    ad::Tape tape;
    ad::Var pooled;
    cnn.forward_embedded(tape, tape.constant(x), {}, nullptr, &pooled);
    return pooled.value();
  };
  const Tensor a = pooled_at(4), b = pooled_at(11);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

void randomize(Model& m, std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& n : m.params().names())
    for (double& x : m.params().get(n).data()) x = rng.uniform(-0.5, 0.5);
}

TEST(Gradients, EveryVariantMatchesFiniteDifferences) {
  const auto data = testing::tiny_corpus(17, 4, 10, 8, 3);
  std::vector<ModelConfig> configs;
  for (PosMode pos : {PosMode::kOff, PosMode::kOneHot, PosMode::kLearned}) {
    for (Variant v : {Variant::kWp, Variant::kLstm}) {
      ModelConfig c = recurrent(v, 3, 4, pos);
      c.pos_dim = 3;
      configs.push_back(c);
    }
  }
  ModelConfig cnn = cnn_config();
  cnn.max_len = 8;
  cnn.cnn_widths = {2, 3};
  cnn.cnn_maps = 3;
  configs.push_back(cnn);
  ModelConfig logreg;
  logreg.variant = Variant::kLogReg;
  configs.push_back(logreg);
  for (const auto& c : configs) {
    auto m = testing::make_model(c, data, 2);
    randomize(*m, 5);
    const auto r = testing::check_gradients(*m, m->encode(data[1]));
    EXPECT_LT(r.max_rel_error, 1e-4) << to_string(c.variant) << "/" << to_string(c.pos_mode) << " "
                                     << r.worst;
    EXPECT_GT(r.checked, 0u);
  }
}

TEST(LogReg, Featurize) {
  const auto f = logreg_featurize({"a", "b", "a"});
  const std::string sep = "\xE2\x96\x81";
  EXPECT_EQ(f.size(), 4u);
  EXPECT_EQ(f.at("a"), 2.0);
  EXPECT_EQ(f.at("b"), 1.0);
  EXPECT_EQ(f.at("a" + sep + "b"), 1.0);
  EXPECT_EQ(f.at("b" + sep + "a"), 1.0);
}

TEST(LogReg, ZeroWeightsGiveHalfAndUnseenIgnored) {
  const std::vector<Sample> train = {testing::make_sample("again", "x @@@@ y"),
                                     testing::make_sample("none", "z @@@@ y")};
  ModelConfig c;
  c.variant = Variant::kLogReg;
  auto m = testing::make_model(c, train);
  const auto p = m->predict_proba(m->encode(testing::make_sample("none", "q @@@@ r")));
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(m->encode(testing::make_sample("none", "q @@@@ r")).feature_ids.size(), 1u);
}

TEST(LogReg, SeparableToySetIsFitted) {
  std::vector<Sample> train;
  for (int i = 0; i < 20; ++i) {
    train.push_back(testing::make_sample("again", "good @@@@ v" + std::to_string(i % 3)));
    train.push_back(testing::make_sample("none", "bad @@@@ v" + std::to_string(i % 3)));
  }
  ModelConfig c;
  c.variant = Variant::kLogReg;
  auto m = testing::make_model(c, train);
  TrainConfig tc;
  tc.batch_size = 8;
  tc.adam.learning_rate = 0.05;
  tc.max_epochs = 30;
  tc.patience = 30;
  presup::train(*m, train, train, tc);
  std::size_t correct = 0;
  for (const auto& s : train) correct += m->predict(m->encode(s)) == binary_label(s);
  EXPECT_EQ(correct, train.size());
}

TEST(Mfc, MajorityAndTieRule) {
  ModelConfig c;
  c.variant = Variant::kMfc;
  std::vector<Sample> train;
  for (int i = 0; i < 60; ++i) train.push_back(testing::make_sample("again", "a @@@@ b"));
  for (int i = 0; i < 40; ++i) train.push_back(testing::make_sample("none", "a @@@@ b"));
  auto m = testing::make_model(c, train);
  m->fit(m->encode_all(train));
  EXPECT_EQ(dynamic_cast<MfcModel&>(*m).majority(), 1);
  EXPECT_EQ(m->predict(m->encode(train.back())), 1);

  std::vector<Sample> tie(train.begin() + 20, train.end());
  m->fit(m->encode_all(tie));
  EXPECT_EQ(dynamic_cast<MfcModel&>(*m).majority(), 1);

  std::vector<Sample> neg(train.begin() + 30, train.end());
  m->fit(m->encode_all(neg));
  EXPECT_EQ(dynamic_cast<MfcModel&>(*m).majority(), 0);
  EXPECT_EQ(m->params().param_count(), 0u);
}

TEST(Encode, TruncatesLongSamples) {
  const auto data = testing::tiny_corpus();
  ModelConfig c = recurrent(Variant::kWp);
  c.max_len = 6;
  auto m = testing::make_model(c, data);
  const EncodedSample e = m->encode(testing::make_sample("again", "w1 w2 w3 w4 w5 w6 @@@@ w7 w8"));
  EXPECT_EQ(e.length(), 6u);
  EXPECT_EQ(e.tokens[e.marker], m->vocab().marker_id());
  EXPECT_EQ(e.label, 1);
}

}  // namespace
}  // namespace presup
