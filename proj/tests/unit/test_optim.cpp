#include <gtest/gtest.h>

#include "presup/error.hpp"
#include "presup/optim.hpp"

namespace presup {
namespace {

TEST(Adam, ZeroGradientLeavesParameterUnchanged) {
  ParamStore p;
  p.add("w", Tensor::vector({0.7, -0.2}));
  AdamState st;
  adam_step(p, Gradients{{"w", Tensor::vector({0, 0})}}, st);
  EXPECT_EQ(p.get("w"), Tensor::vector({0.7, -0.2}));
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepByHand) {
  ParamStore p;
  p.add("w", Tensor::vector({0.0}));
  AdamState st;
  adam_step(p, Gradients{{"w", Tensor::vector({1.0})}}, st);
  EXPECT_NEAR(st.m.at("w")[0], 0.1, 1e-15);
  EXPECT_NEAR(st.v.at("w")[0], 0.001, 1e-15);
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p.get("w")[0], -1e-3 / (1.0 + 1e-8), 1e-18);
  EXPECT_NEAR(p.get("w")[0], -9.99999995e-4, 1e-11);
}

TEST(Adam, IdenticalParamsGetIdenticalUpdates) {
  ParamStore p;
  p.add("a", Tensor::vector({0.5, 0.5}));
  p.add("b", Tensor::vector({0.5, 0.5}));
  AdamState st;
  for (int i = 0; i < 5; ++i) {
    adam_step(p, Gradients{{"a", Tensor::vector({0.3, -2})}, {"b", Tensor::vector({0.3, -2})}}, st);
  }
  EXPECT_EQ(p.get("a"), p.get("b"));
}

TEST(Adam, MissingGradientIsUsageError) {
  ParamStore p;
  p.add("a", Tensor::vector({1}));
  p.add("frozen", Tensor::vector({1}), false);
  AdamState st;
  EXPECT_THROW(adam_step(p, Gradients{}, st), UsageError);
  EXPECT_NO_THROW(adam_step(p, Gradients{{"a", Tensor::vector({1})}}, st));
  EXPECT_EQ(p.get("frozen"), Tensor::vector({1}));
}

TEST(Clip, ClampsElementwise) {
  Tensor g = Tensor::vector({-2, 0.5, 3});
  clip_gradients(g);
  EXPECT_EQ(g, Tensor::vector({-1, 0.5, 1}));
}

TEST(Clip, InRangeUnchangedAndIdempotent) {
  Tensor g = Tensor::vector({-1, 0, 0.99, 1});
  const Tensor before = g;
  clip_gradients(g);
  EXPECT_EQ(g, before);
  Tensor h = Tensor::vector({-7, 4});
  clip_gradients(h);
  const Tensor once = h;
  clip_gradients(h);
  EXPECT_EQ(h, once);
}

TEST(Clip, InvertedBoundsAreUsageError) {
  Tensor g = Tensor::vector({1});
  EXPECT_THROW(clip_gradients(g, 1.0, -1.0), UsageError);
}

TEST(Dropout, ZeroProbabilityIsAllOnes) {
  Rng rng(1);
  EXPECT_EQ(dropout_mask(Shape{3, 4}, 0.0, rng), Tensor(Shape{3, 4}, 1.0));
}

TEST(Dropout, MaskIsUnbiased) {
  Rng rng(2);
  const Tensor m = dropout_mask(Shape{100000}, 0.5, rng);
  double sum = 0;
  for (double x : m.values()) {
    EXPECT_TRUE(x == 0.0 || x == 2.0);
    sum += x;
  }
  const double mean = sum / 100000.0;
  EXPECT_GE(mean, 0.99);
  EXPECT_LE(mean, 1.01);
}

TEST(Dropout, SameSeedSameMask) {
  Rng a(9), b(9);
  EXPECT_EQ(dropout_mask(Shape{50}, 0.3, a), dropout_mask(Shape{50}, 0.3, b));
}

TEST(Dropout, ProbabilityOutOfRangeIsUsageError) {
  Rng rng(0);
  EXPECT_THROW(dropout_mask(Shape{2}, 1.0, rng), UsageError);
  EXPECT_THROW(dropout_mask(Shape{2}, -0.1, rng), UsageError);
}

}  // namespace
}  // namespace presup
