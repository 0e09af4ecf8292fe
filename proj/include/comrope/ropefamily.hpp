#pragma once

// Angle-matrix sets for the rotary encoding family (vanilla RoPE, LieRE,
// ComRoPE-AP, ComRoPE-LD) and the rotation R(x) = exp(sum_i A_i x_i).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "comrope/linalg.hpp"

namespace comrope {

using Rng = std::mt19937_64;

enum class Variant { Vanilla, LieRE, ComRoPE_AP, ComRoPE_LD };

/// "vanilla", "liere", "ap", "ld"
std::string_view to_string(Variant v) noexcept;
/// Accepts the short names above (case-insensitive) plus "comrope-ap" / "comrope-ld".
std::optional<Variant> parse_variant(std::string_view name);
bool is_trainable(Variant v) noexcept;

/// Raised when model dimensions are incompatible with a variant.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelDims {
  std::size_t d = 768;      // embedding dimension
  std::size_t heads = 12;
  std::size_t block = 8;    // block order b
  std::size_t axes = 2;     // coordinate axes N
  std::size_t layers = 12;  // only used for parameter accounting

  std::size_t head_dim() const noexcept { return d / heads; }
  /// Diagonal blocks per head, d / (h * b).
  std::size_t blocks_per_head() const noexcept { return d / (heads * block); }

  /// Throws DimensionError when the layout is invalid for the variant.
  void validate(Variant v) const;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Point in R^N.
class Coordinate {
 public:
  Coordinate() = default;
  explicit Coordinate(std::size_t axes) : v_(axes, 0.0) {}
  Coordinate(std::initializer_list<double> values) : v_(values) {}
  explicit Coordinate(std::vector<double> values) : v_(std::move(values)) {}

  std::size_t size() const noexcept { return v_.size(); }
  double& operator[](std::size_t i) noexcept { return v_[i]; }
  double operator[](std::size_t i) const noexcept { return v_[i]; }
  std::span<const double> values() const noexcept { return v_; }

  Coordinate& operator+=(const Coordinate& o);
  Coordinate& operator-=(const Coordinate& o);
  friend Coordinate operator+(Coordinate a, const Coordinate& b) { return a += b; }
  friend Coordinate operator-(Coordinate a, const Coordinate& b) { return a -= b; }
  friend bool operator==(const Coordinate&, const Coordinate&) = default;

 private:
  std::vector<double> v_;
};

/// Trainable scalars of a set. Layout depends on the variant:
///   LieRE: matrices[(axis * h + head) * m + j]
///   AP:    matrices[head * m + j]
///   LD:    matrices[head * m + j], thetas[(head * m + j) * N + axis]
///   Vanilla: empty
/// where m = blocks_per_head().
struct ParamSet {
  std::vector<linalg::Matrix> matrices;
  std::vector<double> thetas;

  std::size_t scalar_count() const noexcept;
  /// Flattened view in layout order (matrices row-major, then thetas).
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> values);
  /// this += s * other
  void axpy(double s, const ParamSet& other);
  double norm() const;
};

class AngleMatrixSet {
 public:
  /// Rebuilds the skew blocks from the parameters of a trainable variant.
  static AngleMatrixSet from_params(Variant variant, const ModelDims& dims, ParamSet params,
                                    std::optional<std::uint64_t> seed = std::nullopt);

  Variant variant() const noexcept { return variant_; }
  const ModelDims& dims() const noexcept { return dims_; }
  std::optional<std::uint64_t> seed() const noexcept { return seed_; }
  /// Rotation base; only meaningful for the vanilla variant.
  double theta_base() const noexcept { return theta_base_; }
  const ParamSet& params() const noexcept { return params_; }

  /// Block (axis, head, j) of order b, all indices 0-based.
  const linalg::SkewBlock& block(std::size_t axis, std::size_t head, std::size_t j) const {
    return blocks_[index(axis, head, j)];
  }

  /// out = sum_axis x[axis] * B(axis, head, j), written as a b*b row-major buffer.
  void generator_into(std::span<const double> x, std::size_t head, std::size_t j,
                      std::span<double> out) const;

 private:
  friend AngleMatrixSet build_vanilla(const ModelDims&, double);
  AngleMatrixSet(Variant v, const ModelDims& dims);
  std::size_t index(std::size_t axis, std::size_t head, std::size_t j) const noexcept {
    return (axis * dims_.heads + head) * dims_.blocks_per_head() + j;
  }

  Variant variant_ = Variant::Vanilla;
  ModelDims dims_;
  std::optional<std::uint64_t> seed_;
  double theta_base_ = 0.0;
  ParamSet params_;
  std::vector<linalg::SkewBlock> blocks_;
};

inline constexpr double kDefaultThetaBase = 1.0 / 10000.0;
inline constexpr double kDefaultInitScale = 0.2;

/// 1-based block j serves 1-based axis ((j - 1) mod N) + 1. 0-based: j % N.
constexpr std::size_t serving_axis(std::size_t block_index, std::size_t axes) noexcept {
  return block_index % axes;
}

/// Angular frequency theta^((2N / head_dim) * j) of 1-based block j.
double vanilla_frequency(const ModelDims& dims, double theta_base, std::size_t j1);

AngleMatrixSet build_vanilla(const ModelDims& dims, double theta_base = kDefaultThetaBase);

/// Every P_ij drawn i.i.d. N(0, init_scale^2); init_scale = 0 gives the zero set.
AngleMatrixSet build_liere(const ModelDims& dims, Rng& rng, double init_scale = kDefaultInitScale);

/// One parameter matrix per (head, j), layout head * m + j.
AngleMatrixSet build_comrope_ap(const ModelDims& dims, std::vector<linalg::Matrix> params);
AngleMatrixSet build_comrope_ap(const ModelDims& dims, Rng& rng, double init_scale = kDefaultInitScale);

/// bases: one per (head, j); thetas: N per (head, j), layout (head * m + j) * N + axis.
AngleMatrixSet build_comrope_ld(const ModelDims& dims, std::vector<linalg::Matrix> bases,
                                std::vector<double> thetas);
/// Bases i.i.d. N(0, init_scale^2), thetas i.i.d. N(0, 1).
AngleMatrixSet build_comrope_ld(const ModelDims& dims, Rng& rng, double init_scale = kDefaultInitScale);

/// Builds any variant from a seed; vanilla ignores init_scale.
AngleMatrixSet build_set(Variant v, const ModelDims& dims, std::uint64_t seed,
                         double init_scale = kDefaultInitScale);

/// Per-block rotations exp(sum_i x_i B_ij) for one head.
linalg::BlockRotation rotation_blocks(const AngleMatrixSet& set, const Coordinate& x, std::size_t head);
/// Dense (d/h) x (d/h) rotation for one head.
linalg::RotationMatrix rotation(const AngleMatrixSet& set, const Coordinate& x, std::size_t head);

struct CommutingCheck {
  bool commuting = true;
  double max_residual = 0.0;
};

/// Max commutator residual over axis pairs and blocks, compared against tol.
CommutingCheck is_pairwise_commuting(const AngleMatrixSet& set, double tol);

}  // namespace comrope
