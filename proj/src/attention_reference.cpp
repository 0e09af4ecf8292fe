// Serial reference implementations of the attention kernels.

#include <vector>

#include "attention_detail.hpp"
#include "comrope/attention.hpp"

namespace comrope::attention::reference {

AttentionBatch rotate_qk(const AttentionBatch& batch, const AngleMatrixSet& set,
                         std::span<const Coordinate> positions) {
  detail::check_shapes(batch, set, positions);
  AttentionBatch out(batch.n, batch.heads, batch.head_dim);
  for (std::size_t t = 0; t < batch.n; ++t) {
    for (std::size_t h = 0; h < batch.heads; ++h) {
      const auto r = rotation_blocks(set, positions[t], h);
      const std::size_t off = batch.row(t, h);
      r.apply(batch.q_vec(t, h), std::span<double>(out.q.data() + off, batch.head_dim));
      r.apply(batch.k_vec(t, h), std::span<double>(out.k.data() + off, batch.head_dim));
    }
  }
  return out;
}

AttentionBatch rotate_qk_dense(const AttentionBatch& batch, const AngleMatrixSet& set,
                               std::span<const Coordinate> positions) {
  detail::check_shapes(batch, set, positions);
  const std::size_t dh = batch.head_dim;
  AttentionBatch out(batch.n, batch.heads, dh);
  for (std::size_t t = 0; t < batch.n; ++t) {
    for (std::size_t h = 0; h < batch.heads; ++h) {
      const auto r = rotation(set, positions[t], h);
      const std::size_t off = batch.row(t, h);
      for (std::size_t i = 0; i < dh; ++i) {
        double aq = 0.0, ak = 0.0;
        for (std::size_t j = 0; j < dh; ++j) {
          aq += r(i, j) * batch.q[off + j];
          ak += r(i, j) * batch.k[off + j];
        }
        out.q[off + i] = aq;
        out.k[off + i] = ak;
      }
    }
  }
  return out;
}

LogitTensor logits(const AttentionBatch& rotated) {
  rotated.validate();
  LogitTensor out(rotated.heads, rotated.n);
  for (std::size_t h = 0; h < rotated.heads; ++h) {
    for (std::size_t i = 0; i < rotated.n; ++i) {
      for (std::size_t j = 0; j < rotated.n; ++j) {
        double acc = 0.0;
        for (std::size_t e = 0; e < rotated.head_dim; ++e) {
          acc += rotated.q[rotated.row(i, h) + e] * rotated.k[rotated.row(j, h) + e];
        }
        out.at(h, i, j) = acc;
      }
    }
  }
  return out;
}

}  // namespace comrope::attention::reference
