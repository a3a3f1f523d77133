#include <gtest/gtest.h>

#include "catnet/numerics/grad_check.hpp"
#include "catnet/numerics/init.hpp"
#include "catnet/numerics/ops.hpp"
#include "catnet/stsync/stsync.hpp"
#include "test_util.hpp"

using namespace catnet;
using namespace catnet::stsync;
using catnet::testing::random_tensor;

namespace {

StSyncConfig small_config(std::size_t c = 4) {
  StSyncConfig cfg;
  cfg.channels = c;
  return cfg;
}

void fill(Var& v, double x) {
  for (auto& e : v.mutable_value().data()) e = x;
}

Tensor stack(const std::vector<Tensor>& parts) {
  Shape s = parts[0].shape();
  s.insert(s.begin(), parts.size());
  Tensor out(s);
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (double v : p.data()) out[off++] = v;
  }
  return out;
}

// Gives the offset predictors small random weights so sample positions are
// generically non-integer (bilinear sampling is only piecewise smooth).
void randomize_offsets(StSync& s, std::uint64_t seed) {
  s.offset_weight.mutable_value() = random_tensor(s.offset_weight.shape(), seed, -0.05, 0.05);
  s.offset_bias.mutable_value() = random_tensor({2}, seed + 1, -0.4, 0.4);
  s.update_offset_weight.mutable_value() =
      random_tensor(s.update_offset_weight.shape(), seed + 2, -0.05, 0.05);
  s.update_offset_bias.mutable_value() = random_tensor({2}, seed + 3, -0.4, 0.4);
  s.dca_bias.mutable_value() = random_tensor(s.dca_bias.shape(), seed + 4, -1.3, 1.3);
  s.motion_warp.weight.mutable_value() =
      random_tensor(s.motion_warp.weight.shape(), seed + 5, -0.2, 0.2);
  s.update_warp.weight.mutable_value() =
      random_tensor(s.update_warp.weight.shape(), seed + 6, -0.2, 0.2);
}

}  // namespace

TEST(FeatureBuffer, EvictsOldestAndChecksTicks) {
  FeatureBuffer buf(2);
  for (Tick t = 0; t < 3; ++t) buf.push({Var(Tensor({1, 2, 2}, double(t))), 0, t, {}});
  ASSERT_EQ(buf.size(), 2u);
  EXPECT_EQ(buf[0].tick, 1);
  EXPECT_EQ(buf[1].tick, 2);
  EXPECT_THROW(buf.push({Var(Tensor({1, 2, 2})), 0, 7, {}}), std::invalid_argument);
  EXPECT_THROW(FeatureBuffer(0), std::invalid_argument);
}

TEST(FeatureBuffer, ForwardFillRepeatsNewest) {
  FeatureBuffer buf(3);
  EXPECT_THROW(buf.push_or_fill(std::nullopt, 0), std::logic_error);
  buf.push_or_fill(FeatureGrid{Var(Tensor({1, 2, 2}, 4.0)), 0, 0, {}}, 0);
  buf.push_or_fill(std::nullopt, 1);
  ASSERT_EQ(buf.size(), 2u);
  EXPECT_EQ(buf[1].tick, 1);
  EXPECT_EQ(buf[1].data.value().storage(), buf[0].data.value().storage());
}

TEST(Integrate, SingleAgentIsConvOfDuplicatedSlice) {
  ParameterSet ps;
  StSync s(ps, small_config(), 1);
  Tensor a = random_tensor({4, 5, 5}, 2);
  Var out = s.integrate_agents(Var(stack({a})));
  Var ref = conv2d(concat({Var(a), Var(a)}, 0), s.integrate_weight, s.integrate_bias, {1, 1, 1});
  EXPECT_EQ(out.value().storage(), ref.value().storage());

  Var dup = s.integrate_agents(Var(stack({a, a})));
  EXPECT_EQ(dup.value().storage(), out.value().storage());
}

TEST(Integrate, PinnedAverageOfStreams) {
  ParameterSet ps;
  StSync s(ps, small_config(2), 1);
  Tensor w = init::identity_kernel(2, 4, 3, 0);
  w += init::identity_kernel(2, 4, 3, 2);
  s.integrate_weight.mutable_value() = w * 0.5;
  fill(s.integrate_bias, 0.0);
  Tensor a1({2, 3, 3}), a2({2, 3, 3});
  for (std::size_t i = 0; i < 9; ++i) {
    a1[i] = 1;
    a1[9 + i] = 3;
    a2[i] = 5;
    a2[9 + i] = -1;
  }
  Var out = s.integrate_agents(Var(stack({a1, a2})));
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_DOUBLE_EQ(out.value()[i], 4.0);
    EXPECT_DOUBLE_EQ(out.value()[9 + i], 2.0);
  }
}

TEST(Integrate, EmptyStackRejected) {
  ParameterSet ps;
  StSync s(ps, small_config(), 1);
  EXPECT_THROW(s.integrate_agents(Var(Tensor({0, 4, 4, 4}))), std::invalid_argument);
}

TEST(PredictOffset, ZeroWeightsGiveZeroField) {
  ParameterSet ps;
  StSync s(ps, small_config(16), 1);
  Var off = s.predict_offset(Var(random_tensor({16, 32, 32}, 1)), Var(random_tensor({16, 32, 32}, 2)));
  EXPECT_EQ(off.shape(), (Shape{2, 32, 32}));
  for (double v : off.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(PredictOffset, AntisymmetricWeightsCancelOnEqualInputs) {
  ParameterSet ps;
  StSync s(ps, small_config(), 1);
  Tensor half = random_tensor({2, 4, 3, 3}, 5);
  Tensor w({2, 8, 3, 3});
  for (std::size_t o = 0; o < 2; ++o)
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t k = 0; k < 9; ++k) {
        w[(o * 8 + c) * 9 + k] = half[(o * 4 + c) * 9 + k];
        w[(o * 8 + 4 + c) * 9 + k] = -half[(o * 4 + c) * 9 + k];
      }
  s.offset_weight.mutable_value() = w;
  Tensor b = random_tensor({4, 6, 6}, 6);
  Var off = s.predict_offset(Var(b), Var(b));
  for (double v : off.value().data()) EXPECT_NEAR(v, 0.0, 1e-14);
  EXPECT_THROW(s.predict_offset(Var(b), Var(Tensor({4, 6, 5}))), std::invalid_argument);
}

TEST(DeformWarp, ZeroOffsetsIdentityConv) {
  ParameterSet ps;
  StSync s(ps, small_config(), 1);
  Tensor f = random_tensor({4, 6, 7}, 3);
  Var out = s.deform_warp(Var(f), Var(Tensor({2, 6, 7})));
  EXPECT_EQ(max_abs_diff(out.value(), f), 0.0);
}

TEST(DeformWarp, UnitColumnOffsetShiftsLeft) {
  ParameterSet ps;
  StSync s(ps, small_config(), 1);
  Tensor f = random_tensor({4, 5, 6}, 4);
  Tensor off({2, 5, 6});
  for (std::size_t i = 0; i < 30; ++i) off[30 + i] = 1.0;
  Var out = s.deform_warp(Var(f), Var(off));
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t y = 0; y < 5; ++y)
      for (std::size_t x = 0; x < 6; ++x) {
        double expect = x + 1 < 6 ? f.at(c, y, x + 1) : 0.0;
        EXPECT_EQ(out.value().at(c, y, x), expect);
      }
}

TEST(DeformWarp, HalfRowOffsetInterpolatesRamp) {
  ParameterSet ps;
  StSync s(ps, small_config(1), 1);
  Tensor f({1, 5, 4});
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 4; ++x) f.at(0, y, x) = static_cast<double>(y);
  Tensor off({2, 5, 4});
  for (std::size_t i = 0; i < 20; ++i) off[i] = 0.5;
  Var out = s.deform_warp(Var(f), Var(off));
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 4; ++x) {
      // Last row blends with the zero padding below the grid.
      double expect = y + 1 < 5 ? y + 0.5 : 0.5 * y;
      EXPECT_NEAR(out.value().at(0, y, x), expect, 1e-15);
    }
}

TEST(DeformWarp, IntegerShiftEquivariance) {
  ParameterSet ps;
  StSync s(ps, small_config(), 1);
  Tensor f = random_tensor({4, 6, 6}, 8);
  for (int dy = -2; dy <= 2; ++dy)
    for (int dx = -2; dx <= 2; ++dx) {
      Tensor off({2, 6, 6});
      for (std::size_t i = 0; i < 36; ++i) {
        off[i] = dy;
        off[36 + i] = dx;
      }
      Var out = s.deform_warp(Var(f), Var(off));
      for (std::size_t c = 0; c < 4; ++c)
        for (long y = 0; y < 6; ++y)
          for (long x = 0; x < 6; ++x) {
            long sy = y + dy, sx = x + dx;
            double expect = (sy >= 0 && sy < 6 && sx >= 0 && sx < 6) ? f.at(c, sy, sx) : 0.0;
            EXPECT_EQ(out.value().at(c, y, x), expect);
          }
    }
}

TEST(StGate, ZeroWeightsGiveHalfAlphaAndMidpoint) {
  ParameterSet ps;
  StSync s(ps, small_config(), 1);
  for (Var* v : {&s.gate_spatial_weight, &s.gate_spatial_bias, &s.gate_fc1_weight,
                 &s.gate_fc1_bias, &s.gate_fc2_weight, &s.gate_fc2_bias}) {
    fill(*v, 0.0);
  }
  Tensor h = random_tensor({4, 5, 5}, 1), w = random_tensor({4, 5, 5}, 2);
  auto g = s.st_gate(Var(h), Var(w));
  for (double a : g.alpha.value().data()) EXPECT_EQ(a, 0.5);
  Tensor mid = (h + w) * 0.5;
  EXPECT_LT(max_abs_diff(g.fused.value(), mid), 1e-15);
}

TEST(StGate, EqualInputsReturnHidden) {
  ParameterSet ps;
  StSync s(ps, small_config(), 3);
  Tensor h = random_tensor({4, 5, 5}, 1);
  auto g = s.st_gate(Var(h), Var(h));
  EXPECT_EQ(g.fused.value().storage(), h.storage());
  EXPECT_THROW(s.st_gate(Var(h), Var(Tensor({4, 5, 4}))), std::invalid_argument);
}

TEST(StGate, ConvexBoundOnRandomPairs) {
  ParameterSet ps;
  StSync s(ps, small_config(), 9);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Tensor h = random_tensor({4, 4, 4}, seed, -3, 3), w = random_tensor({4, 4, 4}, seed + 1000, -3, 3);
    auto g = s.st_gate(Var(h), Var(w));
    for (std::size_t i = 0; i < h.numel(); ++i) {
      const double a = g.alpha.value()[i];
      EXPECT_GT(a, 0.0);
      EXPECT_LT(a, 1.0);
      const double v = g.fused.value()[i];
      EXPECT_GE(v, std::min(h[i], w[i]) - 1e-12);
      EXPECT_LE(v, std::max(h[i], w[i]) + 1e-12);
    }
  }
}

TEST(Taru, SingleEntryReturnsIt) {
  ParameterSet ps;
  StSync s(ps, small_config(), 1);
  Var b(random_tensor({4, 4, 4}, 1));
  Var out = s.taru_rollout(std::vector<Var>{b});
  EXPECT_EQ(out.value().storage(), b.value().storage());
  EXPECT_THROW(s.taru_rollout(std::vector<Var>{}), std::invalid_argument);
}

TEST(Taru, ConstantBufferIsFixedPoint) {
  ParameterSet ps;
  StSync s(ps, small_config(), 4);
  Tensor b = random_tensor({4, 6, 6}, 11);
  for (std::size_t k : {1, 2, 4, 8}) {
    std::vector<Var> buf(k, Var(b));
    Var out = s.taru_rollout(buf);
    EXPECT_LT(max_abs_diff(out.value(), b), 1e-9) << "K=" << k;
  }
}

TEST(Taru, MatchesStepByStepTrace) {
  ParameterSet ps;
  StSync s(ps, small_config(), 5);
  randomize_offsets(s, 40);
  std::vector<Var> buf;
  for (std::uint64_t i = 0; i < 3; ++i) buf.emplace_back(random_tensor({4, 6, 6}, 20 + i));
  Var zero(Tensor({4, 6, 6}));
  // i = 2
  Var d2 = s.predict_offset(zero, buf[0]);
  Var w2 = s.deform_warp(buf[0], d2);
  Var s2 = s.st_gate(buf[0], w2).fused;
  Var o2 = conv2d(s2, s.update_offset_weight, s.update_offset_bias, {1, 1, 1});
  Var h2 = deform_warp(s2, o2, s.update_warp);
  // i = 3
  Var d3 = s.predict_offset(buf[0], buf[1]);
  Var w3 = s.deform_warp(buf[1], d3);
  Var s3 = s.st_gate(h2, w3).fused;
  Var h3 = s.update(s3);
  Var out = s.taru_rollout(buf);
  EXPECT_EQ(out.value().storage(), h3.value().storage());
}

TEST(Dca, ZeroProjectionAddsEgo) {
  ParameterSet ps;
  StSync s(ps, small_config(), 1);
  fill(s.dca_weight, 0.0);
  fill(s.dca_bias, 0.0);
  Tensor p = random_tensor({4, 5, 5}, 1), e = random_tensor({4, 5, 5}, 2);
  Var out = s.dca_refine(Var(p), Var(e));
  EXPECT_LT(max_abs_diff(out.value(), p + e), 1e-12);
}

TEST(Dca, ZeroEgoLeavesPrediction) {
  ParameterSet ps;
  StSync s(ps, small_config(), 1);
  Tensor p = random_tensor({4, 5, 5}, 1);
  Var out = s.dca_refine(Var(p), Var(Tensor({4, 5, 5})));
  EXPECT_EQ(out.value().storage(), p.storage());
  EXPECT_THROW(s.dca_refine(Var(p), Var(Tensor({4, 5, 6}))), std::invalid_argument);
}

TEST(Dca, SinglePointAtQueryAddsEgoExactly) {
  ParameterSet ps;
  StSyncConfig cfg = small_config();
  cfg.dca_points = 1;
  StSync s(ps, cfg, 1);
  fill(s.dca_weight, 0.0);
  fill(s.dca_bias, 0.0);
  s.dca_bias.mutable_value()[2] = 0.7;  // any logit: softmax over one point is 1
  Tensor p = random_tensor({4, 5, 5}, 1), e = random_tensor({4, 5, 5}, 2);
  Var out = s.dca_refine(Var(p), Var(e));
  EXPECT_EQ(max_abs_diff(out.value(), p + e), 0.0);
}

TEST(StSyncGradient, RolloutPlusDcaPassesGradCheck) {
  const std::size_t k = 3;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ParameterSet ps;
    StSync s(ps, small_config(), seed);
    randomize_offsets(s, 100 + seed);
    Tensor ego = random_tensor({4, 6, 6}, 500 + seed);
    Tensor x = random_tensor({k, 4, 6, 6}, 600 + seed);
    auto fn = [&](const Var& v) {
      std::vector<Var> buf;
      for (std::size_t i = 0; i < k; ++i) buf.push_back(reshape(slice(v, 0, i, i + 1), {4, 6, 6}));
      return sum(s.dca_refine(s.taru_rollout(buf), Var(ego)));
    };
    auto r = grad_check_detailed(fn, x, 1e-4);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed << " idx " << r.worst_index;
  }
}
