// Parameter gradients of the logit tensor, chained through the Frechet
// derivative of the block exponentials.

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "attention_detail.hpp"
#include "comrope/attention.hpp"

namespace comrope::attention {

using linalg::Matrix;

namespace {

// dL/dM for one block: adjoint Frechet derivative L(M^T, G), read from the
// upper-right block of exp([[M^T, G], [0, M^T]]).
void adjoint_frechet(std::size_t b, const double* gen, const double* g, double* out, std::vector<double>& aug,
                     std::vector<double>& big, std::vector<double>& scratch) {
  const std::size_t n2 = 2 * b;
  std::fill(aug.begin(), aug.end(), 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double mt = gen[j * b + i];
      aug[i * n2 + j] = mt;
      aug[(b + i) * n2 + (b + j)] = mt;
      aug[i * n2 + (b + j)] = g[i * b + j];
    }
  }
  linalg::kernel::expm_series(n2, aug.data(), big.data(), scratch.data(), std::numeric_limits<double>::epsilon() / 2);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) out[i * b + j] = big[i * n2 + (b + j)];
}

Matrix skew_part_gradient(const Matrix& g) { return g - g.transpose(); }

double frobenius_inner(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t e = 0; e < a.data().size(); ++e) s += a.data()[e] * b.data()[e];
  return s;
}

}  // namespace

ParamSet logit_grad_params(const AttentionBatch& batch, const AngleMatrixSet& set,
                           std::span<const Coordinate> positions, const LogitTensor& upstream) {
  if (!is_trainable(set.variant())) throw std::invalid_argument("vanilla RoPE has no trainable parameters");
  detail::check_shapes(batch, set, positions);
  if (upstream.heads != batch.heads || upstream.n != batch.n || upstream.values.size() != batch.heads * batch.n * batch.n) {
    throw std::invalid_argument("upstream cotangent shape does not match the logits");
  }

  const ModelDims& dims = set.dims();
  const std::size_t n = batch.n, heads = dims.heads, dh = dims.head_dim();
  const std::size_t b = dims.block, bb = b * b, m = dims.blocks_per_head(), axes = dims.axes;

  const AttentionBatch rotated = rotate_qk(batch, set, positions);

  // Cotangents of the rotated queries and keys.
  AttentionBatch grad_rot(n, heads, dh);
  const auto work = static_cast<std::ptrdiff_t>(n * heads);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t w = 0; w < work; ++w) {
    const auto t = static_cast<std::size_t>(w) / heads;
    const auto h = static_cast<std::size_t>(w) % heads;
    double* gq = grad_rot.q.data() + grad_rot.row(t, h);
    double* gk = grad_rot.k.data() + grad_rot.row(t, h);
    for (std::size_t o = 0; o < n; ++o) {
      const double u_q = upstream.at(h, t, o);
      const double u_k = upstream.at(h, o, t);
      const double* ko = rotated.k.data() + rotated.row(o, h);
      const double* qo = rotated.q.data() + rotated.row(o, h);
      for (std::size_t e = 0; e < dh; ++e) {
        gq[e] += u_q * ko[e];
        gk[e] += u_k * qo[e];
      }
    }
  }

  // dL/dM for every (token, head, block); each slot written by one iteration.
  std::vector<double> grad_gen(n * heads * m * bb, 0.0);
#pragma omp parallel
  {
    std::vector<double> gen(bb), g(bb), aug(4 * bb), big(4 * bb),
        scratch(linalg::kernel::expm_scratch_size(2 * b));
#pragma omp for schedule(static)
    for (std::ptrdiff_t w = 0; w < work; ++w) {
      const auto t = static_cast<std::size_t>(w) / heads;
      const auto h = static_cast<std::size_t>(w) % heads;
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t off = batch.row(t, h) + j * b;
        const double* q = batch.q.data() + off;
        const double* k = batch.k.data() + off;
        const double* gq = grad_rot.q.data() + off;
        const double* gk = grad_rot.k.data() + off;
        for (std::size_t r = 0; r < b; ++r)
          for (std::size_t c = 0; c < b; ++c) g[r * b + c] = gq[r] * q[c] + gk[r] * k[c];
        set.generator_into(positions[t].values(), h, j, gen);
        adjoint_frechet(b, gen.data(), g.data(), grad_gen.data() + ((t * heads + h) * m + j) * bb, aug, big, scratch);
      }
    }
  }

  // Serial reduction in token order: dL/dB(axis, head, j) = sum_t x_t[axis] dL/dM_t.
  std::vector<Matrix> grad_block(axes * heads * m, Matrix(b));
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t j = 0; j < m; ++j) {
        const double* gm = grad_gen.data() + ((t * heads + h) * m + j) * bb;
        for (std::size_t a = 0; a < axes; ++a) {
          const double xa = positions[t][a];
          auto dst = grad_block[(a * heads + h) * m + j].data();
          for (std::size_t e = 0; e < bb; ++e) dst[e] += xa * gm[e];
        }
      }
    }
  }

  ParamSet grad;
  const ParamSet& params = set.params();
  grad.matrices.assign(params.matrices.size(), Matrix(b));
  grad.thetas.assign(params.thetas.size(), 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t hj = h * m + j;
      switch (set.variant()) {
        case Variant::LieRE:
          for (std::size_t a = 0; a < axes; ++a) {
            grad.matrices[a * heads * m + hj] = skew_part_gradient(grad_block[(a * heads + h) * m + j]);
          }
          break;
        case Variant::ComRoPE_AP:
          grad.matrices[hj] = skew_part_gradient(grad_block[(serving_axis(j, axes) * heads + h) * m + j]);
          break;
        case Variant::ComRoPE_LD: {
          const Matrix base = linalg::skew_from_param(params.matrices[hj]).matrix();
          Matrix grad_base(b);
          for (std::size_t a = 0; a < axes; ++a) {
            const Matrix& gb = grad_block[(a * heads + h) * m + j];
            grad.thetas[hj * axes + a] = frobenius_inner(gb, base);
            grad_base += gb * params.thetas[hj * axes + a];
          }
          grad.matrices[hj] = skew_part_gradient(grad_base);
          break;
        }
        case Variant::Vanilla: break;
      }
    }
  }
  return grad;
}

}  // namespace comrope::attention
