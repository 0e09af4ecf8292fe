#pragma once

// Synthetic relative-position task and a plain gradient-descent trainer for
// the angle-matrix parameters.

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "comrope/attention.hpp"
#include "comrope/coords.hpp"
#include "comrope/ropefamily.hpp"

namespace comrope::toytask {

struct ToySample {
  std::vector<Coordinate> coords;
  attention::AttentionBatch batch;
  attention::LogitTensor target;
};

/// Targets are the logits of a fixed teacher ComRoPE-LD set, so every target
/// depends on the coordinates only through pairwise differences.
struct ToyDataset {
  ModelDims dims;
  std::uint64_t seed = 0;
  std::string target_template;
  std::vector<ToySample> samples;
};

inline constexpr double kTeacherInitScale = 1.0;

/// Coordinates uniform in [0, 1]^N, Q/K entries N(0, 1/head_dim).
ToyDataset gen_synthetic(std::size_t n_tokens, const ModelDims& dims, std::size_t n_samples, std::uint64_t seed);

struct TraceEntry {
  std::size_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

using TrainTrace = std::vector<TraceEntry>;

struct TrainOptions {
  std::size_t steps = 500;
  double lr = 2.0;
  std::uint64_t seed = 0;
  double init_scale = kDefaultInitScale;  // 0 starts from identity rotations
};

struct TrainResult {
  TrainTrace trace;
  AngleMatrixSet set;
};

/// Thrown when the loss stops being finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t step, const std::string& what) : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Mean squared error between the set's logits and the targets.
double evaluate(const ToyDataset& data, const AngleMatrixSet& set);
/// Same, with every sample's coordinates shifted by one global offset per sample.
double evaluate_shifted(const ToyDataset& data, const AngleMatrixSet& set, const coords::OffsetConfig& cfg);

/// Loss and gradient of evaluate() with respect to set.params().
std::pair<double, ParamSet> loss_and_grad(const ToyDataset& data, const AngleMatrixSet& set);

/// Entry k holds the loss and gradient norm before the k-th update.
TrainResult train(const ToyDataset& data, Variant variant, const TrainOptions& opts);
/// Continues from an existing trainable set.
TrainResult train_from(const ToyDataset& data, AngleMatrixSet start, const TrainOptions& opts);

/// Header step,loss,grad_norm.
void emit_trace_csv(const TrainTrace& trace, std::ostream& os);

}  // namespace comrope::toytask
