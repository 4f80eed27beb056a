// Copyright 2026 The DCGN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dcgn/layers.h"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dcgn/errors.h"
#include "dcgn/gradcheck.h"
#include "test_util.h"

namespace dcgn {
namespace {

using testing::Dot;
using testing::NumericGradient;
using testing::RandomTensor;

LayerParams RandomLayer(std::size_t k, std::size_t d_in, std::size_t d_out, SplitMix64& rng) {
  LayerParams p = LayerParams::Create("layer", k, d_in, d_out, rng.next_u64());
  p.w_att.value = RandomTensor(d_in, 1, rng, 0.7);
  p.b_att.value(0, 0) = 0.3;
  return p;
}

TEST(FixedWindowsTest, ShortTailKeepsTrueLength) {
  const auto w = fixed_windows(5, 3);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].begin, 0u);
  EXPECT_EQ(w[0].end, 3u);
  EXPECT_EQ(w[1].begin, 3u);
  EXPECT_EQ(w[1].length(), 2u);
  EXPECT_EQ(pooled_count(5, 3), 2u);
  EXPECT_THROW(pooled_count(5, 0), ParameterError);
}

TEST(AveragePoolTest, MeanOfOneWindow) {
  EXPECT_EQ(average_pool(Tensor{{0}, {3}, {6}}, 3), (Tensor{{3}}));
}

TEST(AveragePoolTest, UnitWindowIsIdentity) {
  SplitMix64 rng(1);
  const Tensor h = RandomTensor(7, 3, rng);
  EXPECT_EQ(average_pool(h, 1), h);
}

TEST(AveragePoolTest, ShortTailIsAveragedOverItsOwnLength) {
  EXPECT_EQ(average_pool(Tensor{{1}, {2}, {3}, {4}, {5}}, 3), (Tensor{{2}, {4.5}}));
}

TEST(AttentionPoolTest, ZeroParametersReduceToAveragePooling) {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 20));
    const auto d = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const auto k = static_cast<std::size_t>(rng.uniform_int(1, 5));
    const Tensor h = RandomTensor(n, d, rng);
    const Tensor att = attention_pool(h, k, Tensor(d, 1), 0.0);
    const Tensor avg = average_pool(h, k);
    ASSERT_TRUE(att.same_shape(avg));
    for (std::size_t i = 0; i < att.size(); ++i) EXPECT_NEAR(att[i], avg[i], 1e-12);
  }
}

TEST(AttentionPoolTest, SaturatedScoresSelectOneRow) {
  const Tensor out = attention_pool(Tensor{{1, 0}, {0, 1}}, 2, Tensor{{50}, {0}}, 0.0);
  EXPECT_NEAR(out(0, 0), 1.0, 1e-6);
  EXPECT_NEAR(out(0, 1), 0.0, 1e-6);
}

TEST(AttentionPoolTest, UnitWindowIgnoresParameters) {
  SplitMix64 rng(3);
  const Tensor h = RandomTensor(6, 4, rng);
  EXPECT_EQ(attention_pool(h, 1, RandomTensor(4, 1, rng, 5.0), -2.0), h);
}

TEST(AttentionPoolTest, BiasCancelsWithinEachWindow) {
  SplitMix64 rng(4);
  const Tensor h = RandomTensor(9, 3, rng);
  const Tensor w = RandomTensor(3, 1, rng);
  const Tensor a = attention_pool(h, 4, w, 0.0);
  const Tensor b = attention_pool(h, 4, w, 17.0);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-13);
}

TEST(AttentionPoolTest, OutputsStayInsideTheWindowHull) {
  SplitMix64 rng(5);
  const Tensor h = RandomTensor(10, 1, rng);
  const Tensor out = attention_pool(h, 3, Tensor{{2.5}}, 0.1);
  const auto windows = fixed_windows(10, 3);
  for (std::size_t m = 0; m < windows.size(); ++m) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = windows[m].begin; i < windows[m].end; ++i) {
      lo = std::min(lo, h(i, 0));
      hi = std::max(hi, h(i, 0));
    }
    EXPECT_GE(out(m, 0), lo - 1e-15);
    EXPECT_LE(out(m, 0), hi + 1e-15);
  }
}

TEST(AttentionPoolTest, BackwardMatchesNumeric) {
  SplitMix64 rng(6);
  Tensor h = RandomTensor(7, 3, rng);
  Tensor w = RandomTensor(3, 1, rng);
  Tensor b{{0.4}};
  const Tensor probe = RandomTensor(3, 3, rng);
  auto f = [&] { return Dot(attention_pool(h, 3, w, b(0, 0)), probe); };
  Tensor d_w(3, 1);
  double d_b = 0.0;
  const Tensor d_h = attention_pool_backward(h, 3, w, b(0, 0), probe, d_w, d_b);
  const Tensor num_h = NumericGradient(h, f);
  const Tensor num_w = NumericGradient(w, f);
  const Tensor num_b = NumericGradient(b, f);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(d_h[i], num_h[i], 1e-8);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(d_w[i], num_w[i], 1e-8);
  EXPECT_NEAR(d_b, num_b[0], 1e-8);
}

TEST(NodeConvolveTest, SumsAWindowWithUnitKernel) {
  EXPECT_EQ(node_convolve(Tensor{{1}, {2}}, 2, Tensor{{1}, {1}}), (Tensor{{3}}));
}

TEST(NodeConvolveTest, ZeroKernelGivesZeros) {
  SplitMix64 rng(7);
  const Tensor out = node_convolve(RandomTensor(5, 2, rng), 2, Tensor(4, 3));
  EXPECT_EQ(out, Tensor(3, 3));
}

TEST(NodeConvolveTest, IdentityKernelWithUnitWindow) {
  SplitMix64 rng(8);
  const Tensor h = RandomTensor(4, 3, rng);
  EXPECT_EQ(node_convolve(h, 1, Tensor::Identity(3)), h);
}

TEST(NodeConvolveTest, ShortTailIsZeroPadded) {
  // Window 2 holds only frame [5]; the missing slot contributes nothing.
  const Tensor out = node_convolve(Tensor{{1}, {2}, {5}}, 2, Tensor{{10}, {1}});
  EXPECT_EQ(out, (Tensor{{12}, {50}}));
}

TEST(NodeConvolveTest, RejectsKernelOfWrongHeight) {
  EXPECT_THROW(node_convolve(Tensor(4, 2), 2, Tensor(3, 1)), DimensionError);
}

TEST(PropagateTest, SingleNodeIsActivatedProjection) {
  SplitMix64 rng(9);
  const Tensor pooled = RandomTensor(1, 3, rng);
  const Tensor conv = RandomTensor(1, 2, rng);
  const Tensor w = RandomTensor(2, 2, rng);
  const Tensor expected = activate(matmul(conv, w), Activation::kSigmoid);
  const Tensor out = propagate(pooled, conv, w, Activation::kSigmoid);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], expected[i], 1e-15);
}

TEST(PropagateTest, TwoIdenticalNodesAverage) {
  const Tensor pooled{{1, 2}, {1, 2}};
  PropagateCache cache;
  const Tensor out = propagate(pooled, Tensor{{1, 3}, {3, 5}}, Tensor::Identity(2),
                               Activation::kIdentity, {}, &cache);
  for (double v : cache.normalized.values()) EXPECT_NEAR(v, 0.5, 1e-15);
  EXPECT_NEAR(out(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(out(0, 1), 4.0, 1e-15);
  EXPECT_DOUBLE_EQ(out(0, 0), out(1, 0));

  const Tensor same =
      propagate(pooled, Tensor{{1, 3}, {1, 3}}, Tensor::Identity(2), Activation::kSigmoid);
  EXPECT_DOUBLE_EQ(same(0, 0), same(1, 0));
  EXPECT_DOUBLE_EQ(same(0, 1), same(1, 1));
}

TEST(PropagateTest, IdentityGraphAndWeightsPassThrough) {
  SplitMix64 rng(10);
  const Tensor conv = RandomTensor(2, 3, rng);
  const Tensor out =
      propagate(Tensor{{1, 0}, {0, 1}}, conv, Tensor::Identity(3), Activation::kIdentity);
  EXPECT_EQ(out, conv);
}

TEST(PropagateTest, BackwardMatchesNumericForEveryInput) {
  SplitMix64 rng(11);
  for (AdjacencyNorm norm : {AdjacencyNorm::kSymmetric, AdjacencyNorm::kRow}) {
    const GraphOptions graph{true, norm};
    Tensor pooled = RandomTensor(4, 3, rng);
    pooled += Tensor(4, 3, 1.0);  // mostly positive cosines, away from the clamp
    Tensor conv = RandomTensor(4, 2, rng);
    Tensor w = RandomTensor(2, 2, rng);
    const Tensor probe = RandomTensor(4, 2, rng);
    auto f = [&] { return Dot(propagate(pooled, conv, w, Activation::kSigmoid, graph), probe); };
    PropagateCache cache;
    propagate(pooled, conv, w, Activation::kSigmoid, graph, &cache);
    Tensor d_w(2, 2);
    const PropagateInputGrads g =
        propagate_backward(pooled, conv, w, Activation::kSigmoid, graph, cache, probe, d_w);
    const Tensor np = NumericGradient(pooled, f);
    const Tensor nc = NumericGradient(conv, f);
    const Tensor nw = NumericGradient(w, f);
    for (std::size_t i = 0; i < np.size(); ++i) EXPECT_NEAR(g.d_pooled[i], np[i], 1e-8);
    for (std::size_t i = 0; i < nc.size(); ++i) EXPECT_NEAR(g.d_convolved[i], nc[i], 1e-8);
    for (std::size_t i = 0; i < nw.size(); ++i) EXPECT_NEAR(d_w[i], nw[i], 1e-8);
  }
}

TEST(LayerForwardTest, FifteenNodesShrinkToFiveThenTwo) {
  SplitMix64 rng(12);
  std::vector<LayerParams> layers = {RandomLayer(3, 4, 6, rng), RandomLayer(3, 6, 5, rng)};
  const Tensor h0 = RandomTensor(15, 4, rng);
  const LayerOutput first = layer_forward(h0, layers[0], {});
  EXPECT_EQ(first.hidden.rows(), 5u);
  const LayerOutput second = layer_forward(first.hidden, layers[1], {});
  EXPECT_EQ(second.hidden.rows(), 2u);
  EXPECT_EQ(stack_node_counts(15, layers), (std::vector<std::size_t>{15, 5, 2}));
  EXPECT_EQ(stack_forward(h0, layers, {}).cols(), 2u * 5u);
}

TEST(LayerForwardTest, WindowEqualToLengthGivesOneNode) {
  SplitMix64 rng(13);
  const LayerOutput out = layer_forward(RandomTensor(4, 3, rng), RandomLayer(4, 3, 2, rng), {});
  EXPECT_EQ(out.pooled.rows(), 1u);
  EXPECT_EQ(out.hidden.rows(), 1u);
}

TEST(LayerForwardTest, RejectsInputOfWrongWidth) {
  SplitMix64 rng(14);
  EXPECT_THROW(layer_forward(RandomTensor(4, 5, rng), RandomLayer(2, 3, 2, rng), {}),
               DimensionError);
}

TEST(LayerBackwardTest, PassesGradcheckForEveryConfiguration) {
  SplitMix64 rng(15);
  for (Pooling pooling : {Pooling::kAverage, Pooling::kAttention}) {
    for (Activation act : {Activation::kSigmoid, Activation::kIdentity}) {
      const LayerOptions options{pooling, act, {}};
      LayerParams params = RandomLayer(3, 3, 4, rng);
      Tensor h = RandomTensor(8, 3, rng);
      h += Tensor(8, 3, 0.8);
      const Tensor probe = RandomTensor(3, 4, rng);
      auto loss = [&] { return Dot(layer_forward(h, params, options).hidden, probe); };

      LayerCache cache;
      layer_forward(h, params, options, &cache);
      LayerGrads grads = LayerGrads::ZerosLike(params);
      const Tensor d_h = layer_backward(h, params, options, cache, probe, grads);
      params.w_conv.grad = grads.w_conv;
      params.w_att.grad = grads.w_att;
      params.b_att.grad = grads.b_att;
      params.w_prop.grad = grads.w_prop;
      const GradcheckReport report = finite_diff_check(loss, params.parameters());
      for (const ParamCheck& c : report.params) {
        EXPECT_TRUE(c.passed) << to_string(pooling) << "/" << to_string(act) << " " << c.name << " "
                              << c.max_relative_error;
      }
      const Tensor numeric = NumericGradient(h, loss);
      for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(d_h[i], numeric[i], 1e-7);
    }
  }
}

TEST(StackForwardTest, SingleFinalNodeIsTheFlatOutput) {
  SplitMix64 rng(16);
  std::vector<LayerParams> layers = {RandomLayer(3, 2, 4, rng)};
  const Tensor h0 = RandomTensor(3, 2, rng);
  const Tensor flat = stack_forward(h0, layers, {});
  const LayerOutput out = layer_forward(h0, layers[0], {});
  EXPECT_EQ(flat, out.hidden);
}

TEST(StackForwardTest, FiveHalvingLayersReduceThirtyTwoNodesToOne) {
  SplitMix64 rng(17);
  std::vector<LayerParams> layers;
  layers.push_back(RandomLayer(2, 3, 8, rng));
  for (int i = 0; i < 4; ++i) layers.push_back(RandomLayer(2, 8, 8, rng));
  const Tensor flat = stack_forward(RandomTensor(32, 3, rng), layers, {});
  EXPECT_EQ(flat.rows(), 1u);
  EXPECT_EQ(flat.cols(), 8u);
  EXPECT_EQ(stack_node_counts(32, layers).back(), 1u);
}

TEST(StackForwardTest, CeilingArithmeticForFortyEightNodes) {
  SplitMix64 rng(18);
  std::vector<LayerParams> layers = {RandomLayer(3, 2, 5, rng), RandomLayer(3, 5, 5, rng)};
  const Tensor flat = stack_forward(RandomTensor(48, 2, rng), layers, {});
  EXPECT_EQ(flat.cols(), 6u * 5u);
}

TEST(StackForwardTest, FlatOutputConcatenatesFinalRows) {
  SplitMix64 rng(19);
  std::vector<LayerParams> layers = {RandomLayer(2, 2, 3, rng)};
  const Tensor h0 = RandomTensor(5, 2, rng);
  const Tensor flat = stack_forward(h0, layers, {});
  const Tensor hidden = layer_forward(h0, layers[0], {}).hidden;
  ASSERT_EQ(flat.cols(), hidden.size());
  for (std::size_t i = 0; i < hidden.size(); ++i) EXPECT_EQ(flat[i], hidden[i]);
}

TEST(StackForwardTest, RejectsMismatchedChain) {
  SplitMix64 rng(20);
  std::vector<LayerParams> layers = {RandomLayer(2, 2, 3, rng), RandomLayer(2, 4, 3, rng)};
  EXPECT_THROW(stack_forward(RandomTensor(5, 2, rng), layers, {}), DimensionError);
}

TEST(StackBackwardTest, MatchesNumericGradientThroughTwoLayers) {
  SplitMix64 rng(21);
  std::vector<LayerParams> layers = {RandomLayer(2, 3, 4, rng), RandomLayer(2, 4, 3, rng)};
  const LayerOptions options{Pooling::kAttention, Activation::kSigmoid, {}};
  Tensor h0 = RandomTensor(7, 3, rng);
  h0 += Tensor(7, 3, 0.5);
  const Tensor probe = RandomTensor(1, 2 * 3, rng);
  auto loss = [&] { return Dot(stack_forward(h0, layers, options), probe); };
  StackCache cache;
  stack_forward(h0, layers, options, &cache);
  std::vector<LayerGrads> grads = {LayerGrads::ZerosLike(layers[0]),
                                   LayerGrads::ZerosLike(layers[1])};
  const Tensor d_h0 = stack_backward(layers, options, cache, probe, grads);
  const Tensor numeric = NumericGradient(h0, loss);
  for (std::size_t i = 0; i < h0.size(); ++i) EXPECT_NEAR(d_h0[i], numeric[i], 1e-7);
  for (std::size_t l = 0; l < 2; ++l) {
    const Tensor num_w = NumericGradient(layers[l].w_prop.value, loss);
    for (std::size_t i = 0; i < num_w.size(); ++i)
      EXPECT_NEAR(grads[l].w_prop[i], num_w[i], 1e-7) << "layer " << l;
    const Tensor num_att = NumericGradient(layers[l].w_att.value, loss);
    for (std::size_t i = 0; i < num_att.size(); ++i)
      EXPECT_NEAR(grads[l].w_att[i], num_att[i], 1e-7) << "layer " << l;
  }
}

TEST(GlorotUniformTest, DeterministicAndBounded) {
  const Tensor a = glorot_uniform(6, 4, 3, "w");
  EXPECT_EQ(a, glorot_uniform(6, 4, 3, "w"));
  EXPECT_NE(a, glorot_uniform(6, 4, 3, "v"));
  const double limit = std::sqrt(6.0 / 10.0);
  for (double v : a.values()) EXPECT_LE(std::abs(v), limit);
}

TEST(PoolingTest, StringRoundTrip) {
  EXPECT_EQ(pooling_from_string(to_string(Pooling::kAverage)), Pooling::kAverage);
  EXPECT_EQ(pooling_from_string(to_string(Pooling::kAttention)), Pooling::kAttention);
  EXPECT_THROW(pooling_from_string("max"), ParameterError);
}

}  // namespace
}  // namespace dcgn
