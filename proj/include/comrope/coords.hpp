#pragma once

// Token coordinate pipeline: relative scaling, patch centers, training-time
// jitter and the global offset used by the shift ablation.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "comrope/ropefamily.hpp"

namespace comrope::coords {

/// Canvas extent per axis in raw units (pixels, frames).
struct CanvasShape {
  std::vector<double> extent;
};

class PatchGrid {
 public:
  /// Throws std::invalid_argument unless every extent is a positive integer
  /// multiple of the matching patch size.
  PatchGrid(CanvasShape canvas, std::vector<double> patch_size);

  const CanvasShape& canvas() const noexcept { return canvas_; }
  const std::vector<double>& patch_size() const noexcept { return patch_; }
  std::size_t axes() const noexcept { return patch_.size(); }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }
  std::size_t patch_count() const noexcept;

  /// Half the patch extent along an axis, in relative units.
  double half_width(std::size_t axis) const noexcept { return patch_[axis] / (2.0 * canvas_.extent[axis]); }

 private:
  CanvasShape canvas_;
  std::vector<double> patch_;
  std::vector<std::size_t> counts_;
};

struct PerturbConfig {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

struct OffsetConfig {
  double rho = 0.0;
  std::uint64_t seed = 0;
};

/// raw_k / X_k per axis.
Coordinate relative_scale(std::span<const double> raw, const CanvasShape& canvas);

/// Centers of every patch, row-major with axis 0 outermost, already scaled to
/// relative units.
std::vector<Coordinate> patch_centers(const PatchGrid& grid);

/// Gaussian jitter with std sigma * dX_k / X_k per axis, clamped to the patch.
std::vector<Coordinate> perturb(std::span<const Coordinate> centers, const PatchGrid& grid,
                                const PerturbConfig& cfg);

struct OffsetResult {
  std::vector<Coordinate> coords;
  Coordinate offset;
};

/// Adds one shared t ~ N(0, rho^2 I) to every coordinate.
OffsetResult global_offset(std::span<const Coordinate> coords, const OffsetConfig& cfg);

/// Same shift drawn from an existing generator; coords must be non-empty.
OffsetResult global_offset(std::span<const Coordinate> coords, double rho, Rng& rng);

}  // namespace comrope::coords
