#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "comrope/toytask.hpp"

namespace comrope::toytask {
namespace {

const ModelDims kToy{16, 1, 4, 2, 1};

TEST(Synthetic, EmptyDataset) {
  const auto data = gen_synthetic(8, kToy, 0, 1);
  EXPECT_TRUE(data.samples.empty());
  EXPECT_FALSE(data.target_template.empty());
}

TEST(Synthetic, ReproducibleForSeed) {
  const auto a = gen_synthetic(6, kToy, 3, 9);
  const auto b = gen_synthetic(6, kToy, 3, 9);
  ASSERT_EQ(a.samples.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(a.samples[s].coords, b.samples[s].coords);
    EXPECT_EQ(a.samples[s].batch, b.samples[s].batch);
    EXPECT_EQ(a.samples[s].target, b.samples[s].target);
  }
  EXPECT_NE(gen_synthetic(6, kToy, 3, 10).samples[0].target, a.samples[0].target);
}

TEST(Synthetic, TargetsInvariantUnderShift) {
  const auto data = gen_synthetic(6, kToy, 2, 3);
  // a perfect student reproduces the targets; shifting its inputs changes nothing
  const double base = evaluate(data, build_set(Variant::ComRoPE_LD, kToy, 3 ^ 0x9e3779b97f4a7c15ULL, kTeacherInitScale));
  EXPECT_LE(base, 1e-28);
  const double shifted = evaluate_shifted(
      data, build_set(Variant::ComRoPE_LD, kToy, 3 ^ 0x9e3779b97f4a7c15ULL, kTeacherInitScale), {25.0, 4});
  EXPECT_LE(shifted, 1e-12);
}

TEST(Train, ZeroLearningRateGivesFlatTrace) {
  const auto data = gen_synthetic(6, kToy, 2, 1);
  TrainOptions opts;
  opts.steps = 5;
  opts.lr = 0.0;
  const auto r = train(data, Variant::ComRoPE_LD, opts);
  ASSERT_EQ(r.trace.size(), 5u);
  for (const auto& e : r.trace) EXPECT_EQ(e.loss, r.trace[0].loss);
}

TEST(Train, ZeroInitStartsFromIdentityRotations) {
  const auto data = gen_synthetic(6, kToy, 2, 1);
  TrainOptions opts;
  opts.steps = 1;
  opts.init_scale = 0.0;
  opts.lr = 0.0;
  const auto r = train(data, Variant::LieRE, opts);
  for (double p : r.set.params().flatten()) EXPECT_EQ(p, 0.0);
  // identity rotations leave the plain dot products as logits
  double mse = 0.0, count = 0.0;
  for (const auto& s : data.samples) {
    const auto plain = attention::logits(s.batch);
    for (std::size_t i = 0; i < plain.values.size(); ++i) {
      const double diff = plain.values[i] - s.target.values[i];
      mse += diff * diff;
      count += 1;
    }
  }
  EXPECT_DOUBLE_EQ(r.trace[0].loss, mse / count);
}

TEST(Train, LDHalvesLossAndIgnoresShift) {
  const auto data = gen_synthetic(8, kToy, 8, 1);
  TrainOptions opts;
  opts.seed = 1;
  const auto r = train(data, Variant::ComRoPE_LD, opts);
  ASSERT_EQ(r.trace.size(), 500u);
  const double final_loss = evaluate(data, r.set);
  EXPECT_LE(final_loss, 0.5 * r.trace.front().loss);
  std::size_t non_increasing = 0;
  for (std::size_t k = 1; k <= 50; ++k) non_increasing += r.trace[k].loss <= r.trace[k - 1].loss;
  EXPECT_GE(non_increasing, 45u);
  EXPECT_LE(std::abs(evaluate_shifted(data, r.set, {1.0, 1}) - final_loss), 1e-6);
}

TEST(Train, RejectsVanilla) {
  const auto data = gen_synthetic(4, {16, 1, 2, 2, 1}, 1, 1);
  EXPECT_THROW(train(data, Variant::Vanilla, {}), std::invalid_argument);
}

TEST(Train, DivergenceReportsStep) {
  const auto data = gen_synthetic(6, kToy, 2, 1);
  TrainOptions opts;
  opts.steps = 50;
  // rotations are orthogonal, so the loss stays bounded; only the parameters can blow up
  opts.lr = std::numeric_limits<double>::infinity();
  try {
    train(data, Variant::ComRoPE_LD, opts);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.step(), 0u);
  }
}

TEST(Trace, CsvFormat) {
  const TrainTrace trace{{0, 0.5, 0.25}, {1, 0.125, 1e-3}};
  std::ostringstream os;
  emit_trace_csv(trace, os);
  EXPECT_EQ(os.str(), "step,loss,grad_norm\n0,0.5,0.25\n1,0.125,0.001\n");
  std::ostringstream empty;
  emit_trace_csv({}, empty);
  EXPECT_EQ(empty.str(), "step,loss,grad_norm\n");
}

}  // namespace
}  // namespace comrope::toytask
