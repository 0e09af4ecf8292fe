#pragma once

// Query/key rotation, pre-softmax logits, the relative-form oracle and
// logit gradients with respect to the angle-matrix parameters.

#include <cstddef>
#include <span>
#include <vector>

#include "comrope/ropefamily.hpp"

namespace comrope::attention {

/// Q and K laid out (n, h, d/h), row-major.
struct AttentionBatch {
  std::size_t n = 0;
  std::size_t heads = 0;
  std::size_t head_dim = 0;
  std::vector<double> q;
  std::vector<double> k;

  AttentionBatch() = default;
  AttentionBatch(std::size_t n, std::size_t heads, std::size_t head_dim);

  std::size_t row(std::size_t token, std::size_t head) const noexcept { return (token * heads + head) * head_dim; }
  std::span<const double> q_vec(std::size_t token, std::size_t head) const { return {q.data() + row(token, head), head_dim}; }
  std::span<const double> k_vec(std::size_t token, std::size_t head) const { return {k.data() + row(token, head), head_dim}; }

  /// Throws std::invalid_argument on inconsistent sizes or non-finite values.
  void validate() const;
  friend bool operator==(const AttentionBatch&, const AttentionBatch&) = default;
};

/// Logits laid out (h, n, n).
struct LogitTensor {
  std::size_t heads = 0;
  std::size_t n = 0;
  std::vector<double> values;

  LogitTensor() = default;
  LogitTensor(std::size_t heads, std::size_t n) : heads(heads), n(n), values(heads * n * n, 0.0) {}

  double& at(std::size_t h, std::size_t i, std::size_t j) noexcept { return values[(h * n + i) * n + j]; }
  double at(std::size_t h, std::size_t i, std::size_t j) const noexcept { return values[(h * n + i) * n + j]; }
  friend bool operator==(const LogitTensor&, const LogitTensor&) = default;
};

/// ||a - b||_F over the whole tensor.
double frobenius_distance(const LogitTensor& a, const LogitTensor& b);

/// Random Q/K with entries N(0, 1/head_dim).
AttentionBatch random_batch(std::size_t n, const ModelDims& dims, Rng& rng);

/// Rotates every (token, head) segment block by block. Parallel over tokens
/// and heads; output is bitwise independent of the thread count.
AttentionBatch rotate_qk(const AttentionBatch& batch, const AngleMatrixSet& set,
                         std::span<const Coordinate> positions);

/// logits[h][i][j] = q_i . k_j (unscaled).
LogitTensor logits(const AttentionBatch& rotated);

/// q^T R(y - x) k for one head.
double relative_logit_oracle(std::span<const double> q, std::span<const double> k, const AngleMatrixSet& set,
                             const Coordinate& x, const Coordinate& y, std::size_t head);

/// Gradient of sum(upstream * logits(rotate_qk(batch, set, positions))) with
/// respect to set.params(), same layout. Throws for the vanilla variant.
ParamSet logit_grad_params(const AttentionBatch& batch, const AngleMatrixSet& set,
                           std::span<const Coordinate> positions, const LogitTensor& upstream);

/// Single-threaded reference kernels kept for cross-checking and benchmarks.
namespace reference {

AttentionBatch rotate_qk(const AttentionBatch& batch, const AngleMatrixSet& set,
                         std::span<const Coordinate> positions);
/// Builds the dense (d/h) x (d/h) rotation and multiplies by it.
AttentionBatch rotate_qk_dense(const AttentionBatch& batch, const AngleMatrixSet& set,
                               std::span<const Coordinate> positions);
LogitTensor logits(const AttentionBatch& rotated);

}  // namespace reference

}  // namespace comrope::attention
