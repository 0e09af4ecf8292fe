#pragma once

// Dense small-matrix kernels: skew-symmetric generators, the matrix
// exponential and its Frechet derivative, commutators and block-diagonal
// rotations.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace comrope::linalg {

/// Square row-major matrix of doubles. Named constructors reject non-finite
/// entries; arithmetic results are not re-validated.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t order);

  static Matrix identity(std::size_t order);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix from_data(std::size_t order, std::vector<double> data);

  std::size_t order() const noexcept { return order_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * order_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * order_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  double frobenius_norm() const noexcept;
  /// Maximum absolute column sum.
  double one_norm() const noexcept;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s) noexcept;

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) noexcept { return a *= s; }
  friend Matrix operator*(double s, Matrix a) noexcept { return a *= s; }
  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t order_ = 0;
  std::vector<double> data_;
};

/// Real skew-symmetric block, B == -B^T exactly.
class SkewBlock {
 public:
  SkewBlock() = default;
  static SkewBlock zero(std::size_t order);
  /// Accepts m when ||m + m^T||_F <= 1e-14 * ||m||_F, then stores the exact
  /// skew part (m - m^T) / 2.
  static SkewBlock from_matrix(const Matrix& m);

  std::size_t order() const noexcept { return m_.order(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }

  SkewBlock scaled(double s) const;
  /// this += s * other
  void add_scaled(const SkewBlock& other, double s);

  friend bool operator==(const SkewBlock&, const SkewBlock&) = default;

 private:
  explicit SkewBlock(Matrix m) : m_(std::move(m)) {}
  friend SkewBlock skew_from_param(const Matrix& p);
  Matrix m_;
};

/// Orthogonal matrix with unit determinant, produced by the exponential of a
/// skew generator.
class RotationMatrix {
 public:
  RotationMatrix() = default;
  /// Wraps m without checking; callers that can't guarantee the invariants
  /// should check orthogonality_defect() themselves.
  static RotationMatrix adopt(Matrix m) { return RotationMatrix(std::move(m)); }

  std::size_t order() const noexcept { return m_.order(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }

  RotationMatrix transpose() const { return RotationMatrix(m_.transpose()); }
  /// ||R^T R - I||_F
  double orthogonality_defect() const;

 private:
  explicit RotationMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

inline constexpr double kSeriesTolerance = 1e-13;
inline constexpr double kOrthogonalityTolerance = 1e-10;
inline constexpr double kDeterminantTolerance = 1e-8;

/// Returns P - P^T.
SkewBlock skew_from_param(const Matrix& p);

/// exp(scale * B). Closed form for 2x2, scaling-and-squaring otherwise.
RotationMatrix expm_skew(const SkewBlock& b, double scale = 1.0);

/// exp(M) for a general square matrix. Throws std::range_error on overflow.
Matrix expm_general(const Matrix& m);

/// Returns (exp(M), L(M, E)) where L is the Frechet derivative of exp at M in
/// direction E, read off the upper-right block of exp([[M, E], [0, M]]).
std::pair<Matrix, Matrix> expm_frechet(const Matrix& m, const Matrix& e);

/// ||AB - BA||_F
double commutator_residual(const Matrix& a, const Matrix& b);

double determinant(const Matrix& m);

/// Block-diagonal orthogonal matrix kept as its diagonal blocks.
class BlockRotation {
 public:
  BlockRotation() = default;
  explicit BlockRotation(std::vector<RotationMatrix> blocks);

  std::size_t block_order() const noexcept { return block_order_; }
  std::size_t block_count() const noexcept { return blocks_.size(); }
  std::size_t order() const noexcept { return block_order_ * blocks_.size(); }
  const RotationMatrix& block(std::size_t j) const { return blocks_.at(j); }

  /// out = R * in, applied block by block. in and out may not alias.
  void apply(std::span<const double> in, std::span<double> out) const;
  /// Materializes the full matrix; meant for tests and small reports.
  RotationMatrix dense() const;

 private:
  std::size_t block_order_ = 0;
  std::vector<RotationMatrix> blocks_;
};

/// Block-diagonal rotation whose j-th block is expm_skew(blocks[j], scales[j]).
BlockRotation block_diag_expm(std::span<const SkewBlock> blocks, std::span<const double> scales);

/// Assembles diag(blocks...) as one dense matrix.
Matrix block_diag(std::span<const Matrix> blocks);

// Allocation-free kernels on row-major n x n buffers, used by the hot paths.
namespace kernel {

/// c = a * b; c must not alias a or b.
void gemm(std::size_t n, const double* a, const double* b, double* c) noexcept;
double one_norm(std::size_t n, const double* a) noexcept;
/// Scratch length needed by expm_series.
constexpr std::size_t expm_scratch_size(std::size_t n) noexcept { return 3 * n * n; }
/// out = exp(a) by scaling and squaring around a truncated Taylor series.
void expm_series(std::size_t n, const double* a, double* out, double* scratch, double tol) noexcept;
/// out = exp(a) for skew a; closed form when n == 2.
void expm_skew(std::size_t n, const double* a, double* out, double* scratch) noexcept;
/// out = r * v for a single n-length segment.
void matvec(std::size_t n, const double* r, const double* v, double* out) noexcept;

}  // namespace kernel

}  // namespace comrope::linalg
