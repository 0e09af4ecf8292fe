#include "comrope/attention.hpp"

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>

#include "attention_detail.hpp"

namespace comrope::attention {

using linalg::kernel::expm_scratch_size;

AttentionBatch::AttentionBatch(std::size_t n, std::size_t heads, std::size_t head_dim)
    : n(n), heads(heads), head_dim(head_dim), q(n * heads * head_dim, 0.0), k(n * heads * head_dim, 0.0) {}

void AttentionBatch::validate() const {
  const std::size_t expected = n * heads * head_dim;
  if (q.size() != expected || k.size() != expected) {
    throw std::invalid_argument("attention batch: Q/K size does not match (n, h, d/h)");
  }
  for (double v : q)
    if (!std::isfinite(v)) throw std::invalid_argument("attention batch: non-finite query entry");
  for (double v : k)
    if (!std::isfinite(v)) throw std::invalid_argument("attention batch: non-finite key entry");
}

double frobenius_distance(const LogitTensor& a, const LogitTensor& b) {
  if (a.values.size() != b.values.size()) throw std::invalid_argument("logit tensors differ in shape");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return std::sqrt(s);
}

AttentionBatch random_batch(std::size_t n, const ModelDims& dims, Rng& rng) {
  AttentionBatch batch(n, dims.heads, dims.head_dim());
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dims.head_dim())));
  for (double& v : batch.q) v = normal(rng);
  for (double& v : batch.k) v = normal(rng);
  return batch;
}

namespace detail {

void check_shapes(const AttentionBatch& batch, const AngleMatrixSet& set, std::span<const Coordinate> positions) {
  const ModelDims& dims = set.dims();
  batch.validate();
  if (batch.heads != dims.heads || batch.head_dim != dims.head_dim()) {
    throw std::invalid_argument("attention batch shape (h=" + std::to_string(batch.heads) +
                                ", d/h=" + std::to_string(batch.head_dim) + ") does not match the angle set");
  }
  if (positions.size() != batch.n) {
    throw std::invalid_argument("expected " + std::to_string(batch.n) + " positions, got " +
                                std::to_string(positions.size()));
  }
  for (const auto& p : positions) {
    if (p.size() != dims.axes) throw std::invalid_argument("position length does not match the axis count");
  }
}

}  // namespace detail

AttentionBatch rotate_qk(const AttentionBatch& batch, const AngleMatrixSet& set,
                         std::span<const Coordinate> positions) {
  detail::check_shapes(batch, set, positions);
  const std::size_t b = set.dims().block;
  const std::size_t m = set.dims().blocks_per_head();
  const std::size_t heads = batch.heads;
  AttentionBatch out(batch.n, heads, batch.head_dim);
  const auto work = static_cast<std::ptrdiff_t>(batch.n * heads);

#pragma omp parallel
  {
    std::vector<double> gen(b * b), rot(b * b), scratch(expm_scratch_size(b));
#pragma omp for schedule(static)
    for (std::ptrdiff_t w = 0; w < work; ++w) {
      const auto token = static_cast<std::size_t>(w) / heads;
      const auto head = static_cast<std::size_t>(w) % heads;
      const std::size_t base = batch.row(token, head);
      for (std::size_t j = 0; j < m; ++j) {
        set.generator_into(positions[token].values(), head, j, gen);
        linalg::kernel::expm_skew(b, gen.data(), rot.data(), scratch.data());
        const std::size_t off = base + j * b;
        linalg::kernel::matvec(b, rot.data(), batch.q.data() + off, out.q.data() + off);
        linalg::kernel::matvec(b, rot.data(), batch.k.data() + off, out.k.data() + off);
      }
    }
  }
  return out;
}

LogitTensor logits(const AttentionBatch& rotated) {
  rotated.validate();
  const std::size_t n = rotated.n;
  const std::size_t dh = rotated.head_dim;
  LogitTensor out(rotated.heads, n);
  const auto work = static_cast<std::ptrdiff_t>(rotated.heads * n);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t w = 0; w < work; ++w) {
    const auto head = static_cast<std::size_t>(w) / n;
    const auto i = static_cast<std::size_t>(w) % n;
    const double* qi = rotated.q.data() + rotated.row(i, head);
    for (std::size_t j = 0; j < n; ++j) {
      const double* kj = rotated.k.data() + rotated.row(j, head);
      double acc = 0.0;
      for (std::size_t e = 0; e < dh; ++e) acc += qi[e] * kj[e];
      out.at(head, i, j) = acc;
    }
  }
  return out;
}

double relative_logit_oracle(std::span<const double> q, std::span<const double> k, const AngleMatrixSet& set,
                             const Coordinate& x, const Coordinate& y, std::size_t head) {
  const std::size_t dh = set.dims().head_dim();
  if (q.size() != dh || k.size() != dh) throw std::invalid_argument("q/k length must equal the head dimension");
  const auto r = rotation_blocks(set, y - x, head);
  std::vector<double> rk(dh);
  r.apply(k, rk);
  double acc = 0.0;
  for (std::size_t e = 0; e < dh; ++e) acc += q[e] * rk[e];
  return acc;
}

}  // namespace comrope::attention
