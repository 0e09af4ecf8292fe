#include "comrope/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace comrope::linalg {

namespace {

void require_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("matrix entries must be finite");
  }
}

void require_same_order(const Matrix& a, const Matrix& b, const char* what) {
  if (a.order() != b.order()) {
    throw std::invalid_argument(std::string(what) + ": order mismatch (" + std::to_string(a.order()) +
                                " vs " + std::to_string(b.order()) + ")");
  }
}

// Taylor terms beyond this never matter once the argument is scaled below 1/2.
constexpr int kMaxTerms = 40;
constexpr double kScaledNormTarget = 0.5;
// Norms past this overflow exp() in double precision.
constexpr double kOverflowNorm = 700.0;

}  // namespace

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t order) : order_(order), data_(order * order, 0.0) {
  if (order == 0) throw std::invalid_argument("matrix order must be positive");
}

Matrix Matrix::identity(std::size_t order) {
  Matrix m(order);
  for (std::size_t i = 0; i < order; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  Matrix m(n);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != n) throw std::invalid_argument("matrix must be square");
    std::copy(row.begin(), row.end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * n));
    ++i;
  }
  require_finite(m.data_);
  return m;
}

Matrix Matrix::from_data(std::size_t order, std::vector<double> data) {
  if (order == 0 || data.size() != order * order) {
    throw std::invalid_argument("matrix must be square with positive order");
  }
  require_finite(data);
  Matrix m;
  m.order_ = order;
  m.data_ = std::move(data);
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(order_);
  for (std::size_t i = 0; i < order_; ++i)
    for (std::size_t j = 0; j < order_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::frobenius_norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Matrix::one_norm() const noexcept { return kernel::one_norm(order_, data_.data()); }

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_order(*this, other, "matrix addition");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_order(*this, other, "matrix subtraction");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  require_same_order(a, b, "matrix product");
  Matrix c(a.order());
  kernel::gemm(a.order(), a.data_.data(), b.data_.data(), c.data_.data());
  return c;
}

// ---------------------------------------------------------------------------
// SkewBlock / RotationMatrix

SkewBlock SkewBlock::zero(std::size_t order) { return SkewBlock(Matrix(order)); }

SkewBlock SkewBlock::from_matrix(const Matrix& m) {
  const Matrix sym = m + m.transpose();
  if (sym.frobenius_norm() > 1e-14 * m.frobenius_norm()) {
    throw std::invalid_argument("matrix is not skew-symmetric");
  }
  Matrix skew = m - m.transpose();
  skew *= 0.5;
  return SkewBlock(std::move(skew));
}

SkewBlock SkewBlock::scaled(double s) const { return SkewBlock(m_ * s); }

void SkewBlock::add_scaled(const SkewBlock& other, double s) {
  require_same_order(m_, other.m_, "skew accumulation");
  auto dst = m_.data();
  auto src = other.m_.data();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += s * src[k];
}

double RotationMatrix::orthogonality_defect() const {
  Matrix rtr = m_.transpose() * m_;
  rtr -= Matrix::identity(m_.order());
  return rtr.frobenius_norm();
}

// ---------------------------------------------------------------------------
// Operations

SkewBlock skew_from_param(const Matrix& p) {
  if (p.order() == 0) throw std::invalid_argument("parameter matrix must be non-empty");
  return SkewBlock(p - p.transpose());
}

RotationMatrix expm_skew(const SkewBlock& b, double scale) {
  const std::size_t n = b.order();
  Matrix scaled = b.matrix() * scale;
  Matrix out(n);
  std::vector<double> scratch(kernel::expm_scratch_size(n));
  kernel::expm_skew(n, scaled.data().data(), out.data().data(), scratch.data());
  return RotationMatrix::adopt(std::move(out));
}

Matrix expm_general(const Matrix& m) {
  const std::size_t n = m.order();
  if (n == 0) throw std::invalid_argument("matrix order must be positive");
  if (!(m.one_norm() <= kOverflowNorm)) {
    throw std::range_error("expm_general: norm too large for double-precision exponential");
  }
  Matrix out(n);
  std::vector<double> scratch(kernel::expm_scratch_size(n));
  kernel::expm_series(n, m.data().data(), out.data().data(), scratch.data(),
                      std::numeric_limits<double>::epsilon() / 2);
  for (double v : out.data()) {
    if (!std::isfinite(v)) throw std::range_error("expm_general: result overflowed");
  }
  return out;
}

std::pair<Matrix, Matrix> expm_frechet(const Matrix& m, const Matrix& e) {
  require_same_order(m, e, "expm_frechet");
  const std::size_t n = m.order();
  Matrix aug(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      aug(i, j) = m(i, j);
      aug(n + i, n + j) = m(i, j);
      aug(i, n + j) = e(i, j);
    }
  }
  const Matrix big = expm_general(aug);
  Matrix expm(n), frechet(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      expm(i, j) = big(i, j);
      frechet(i, j) = big(i, n + j);
    }
  }
  return {std::move(expm), std::move(frechet)};
}

double commutator_residual(const Matrix& a, const Matrix& b) {
  require_same_order(a, b, "commutator_residual");
  return (a * b - b * a).frobenius_norm();
}

double determinant(const Matrix& m) {
  const std::size_t n = m.order();
  std::vector<double> lu(m.data().begin(), m.data().end());
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu[i * n + k]) > std::abs(lu[pivot * n + k])) pivot = i;
    }
    if (lu[pivot * n + k] == 0.0) return 0.0;
    if (pivot != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu[k * n + j], lu[pivot * n + j]);
      det = -det;
    }
    const double d = lu[k * n + k];
    det *= d;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu[i * n + k] / d;
      for (std::size_t j = k + 1; j < n; ++j) lu[i * n + j] -= f * lu[k * n + j];
    }
  }
  return det;
}

// ---------------------------------------------------------------------------
// Block-diagonal rotations

BlockRotation::BlockRotation(std::vector<RotationMatrix> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw std::invalid_argument("block rotation needs at least one block");
  block_order_ = blocks_.front().order();
  for (const auto& r : blocks_) {
    if (r.order() != block_order_) throw std::invalid_argument("block orders must be uniform");
  }
}

void BlockRotation::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != order() || out.size() != order()) {
    throw std::invalid_argument("BlockRotation::apply: length mismatch");
  }
  const std::size_t b = block_order_;
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    kernel::matvec(b, blocks_[j].matrix().data().data(), in.data() + j * b, out.data() + j * b);
  }
}

RotationMatrix BlockRotation::dense() const {
  std::vector<Matrix> ms;
  ms.reserve(blocks_.size());
  for (const auto& r : blocks_) ms.push_back(r.matrix());
  return RotationMatrix::adopt(block_diag(ms));
}

BlockRotation block_diag_expm(std::span<const SkewBlock> blocks, std::span<const double> scales) {
  if (blocks.empty()) throw std::invalid_argument("block_diag_expm: empty block list");
  if (blocks.size() != scales.size()) {
    throw std::invalid_argument("block_diag_expm: scales length does not match block count");
  }
  std::vector<RotationMatrix> rs;
  rs.reserve(blocks.size());
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (blocks[j].order() != blocks.front().order()) {
      throw std::invalid_argument("block_diag_expm: block orders must be uniform");
    }
    rs.push_back(expm_skew(blocks[j], scales[j]));
  }
  return BlockRotation(std::move(rs));
}

Matrix block_diag(std::span<const Matrix> blocks) {
  if (blocks.empty()) throw std::invalid_argument("block_diag: empty block list");
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.order();
  Matrix out(total);
  std::size_t off = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.order(); ++i)
      for (std::size_t j = 0; j < b.order(); ++j) out(off + i, off + j) = b(i, j);
    off += b.order();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernels

namespace kernel {

void gemm(std::size_t n, const double* a, const double* b, double* c) noexcept {
  std::fill(c, c + n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a[i * n + k];
      const double* brow = b + k * n;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
}

double one_norm(std::size_t n, const double* a) noexcept {
  double best = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += std::abs(a[i * n + j]);
    best = std::max(best, col);
  }
  return best;
}

void expm_series(std::size_t n, const double* a, double* out, double* scratch, double tol) noexcept {
  const std::size_t nn = n * n;
  double* x = scratch;
  double* term = scratch + nn;
  double* tmp = scratch + 2 * nn;

  std::fill(out, out + nn, 0.0);
  for (std::size_t i = 0; i < n; ++i) out[i * n + i] = 1.0;

  const double norm = one_norm(n, a);
  if (norm == 0.0) return;

  int squarings = 0;
  if (norm > kScaledNormTarget) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / kScaledNormTarget)));
  }
  for (std::size_t k = 0; k < nn; ++k) x[k] = std::ldexp(a[k], -squarings);

  // term_k = x^k / k!, accumulated into out.
  std::copy(out, out + nn, term);
  for (int k = 1; k <= kMaxTerms; ++k) {
    gemm(n, term, x, tmp);
    const double inv_k = 1.0 / k;
    for (std::size_t e = 0; e < nn; ++e) {
      term[e] = tmp[e] * inv_k;
      out[e] += term[e];
    }
    if (one_norm(n, term) <= tol * one_norm(n, out)) break;
  }

  for (int s = 0; s < squarings; ++s) {
    gemm(n, out, out, tmp);
    std::copy(tmp, tmp + nn, out);
  }
}

void expm_skew(std::size_t n, const double* a, double* out, double* scratch) noexcept {
  if (n == 2) {
    const double alpha = a[2];
    const double c = std::cos(alpha);
    const double s = std::sin(alpha);
    out[0] = c;
    out[1] = -s;
    out[2] = s;
    out[3] = c;
    return;
  }
  expm_series(n, a, out, scratch, kSeriesTolerance);
}

void matvec(std::size_t n, const double* r, const double* v, double* out) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += r[i * n + j] * v[j];
    out[i] = acc;
  }
}

}  // namespace kernel

}  // namespace comrope::linalg
