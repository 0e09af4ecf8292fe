#include "comrope/coords.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace comrope::coords {

PatchGrid::PatchGrid(CanvasShape canvas, std::vector<double> patch_size)
    : canvas_(std::move(canvas)), patch_(std::move(patch_size)) {
  if (canvas_.extent.empty() || canvas_.extent.size() != patch_.size()) {
    throw std::invalid_argument("canvas and patch size must have the same positive number of axes");
  }
  counts_.reserve(patch_.size());
  for (std::size_t k = 0; k < patch_.size(); ++k) {
    const double extent = canvas_.extent[k];
    const double patch = patch_[k];
    if (!(extent > 0.0) || !(patch > 0.0) || !std::isfinite(extent) || !std::isfinite(patch)) {
      throw std::invalid_argument("canvas extent and patch size must be positive");
    }
    const double q = extent / patch;
    if (q != std::floor(q)) throw std::invalid_argument("canvas extent must be a multiple of the patch size");
    counts_.push_back(static_cast<std::size_t>(q));
  }
}

std::size_t PatchGrid::patch_count() const noexcept {
  std::size_t n = 1;
  for (auto c : counts_) n *= c;
  return n;
}

Coordinate relative_scale(std::span<const double> raw, const CanvasShape& canvas) {
  if (raw.size() != canvas.extent.size()) throw std::invalid_argument("coordinate and canvas axis counts differ");
  Coordinate out(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (canvas.extent[k] == 0.0) throw std::invalid_argument("canvas extent must be non-zero");
    out[k] = raw[k] / canvas.extent[k];
  }
  return out;
}

std::vector<Coordinate> patch_centers(const PatchGrid& grid) {
  const std::size_t axes = grid.axes();
  const auto& counts = grid.counts();
  std::vector<Coordinate> out;
  out.reserve(grid.patch_count());
  std::vector<std::size_t> idx(axes, 0);
  for (std::size_t p = 0; p < grid.patch_count(); ++p) {
    Coordinate c(axes);
    for (std::size_t k = 0; k < axes; ++k) {
      c[k] = (static_cast<double>(idx[k]) + 0.5) * grid.patch_size()[k] / grid.canvas().extent[k];
    }
    out.push_back(std::move(c));
    // Odometer increment with the last axis fastest.
    for (std::size_t k = axes; k-- > 0;) {
      if (++idx[k] < counts[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

std::vector<Coordinate> perturb(std::span<const Coordinate> centers, const PatchGrid& grid,
                                const PerturbConfig& cfg) {
  if (!(cfg.sigma >= 0.0)) throw std::invalid_argument("perturbation intensity must be non-negative");
  std::vector<Coordinate> out(centers.begin(), centers.end());
  if (cfg.sigma == 0.0) return out;

  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& c : out) {
    if (c.size() != grid.axes()) throw std::invalid_argument("coordinate and grid axis counts differ");
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double center = c[k];
      const double half = grid.half_width(k);
      const double stddev = cfg.sigma * grid.patch_size()[k] / grid.canvas().extent[k];
      c[k] = std::clamp(center + stddev * normal(rng), center - half, center + half);
    }
  }
  return out;
}

OffsetResult global_offset(std::span<const Coordinate> coords, double rho, Rng& rng) {
  if (!(rho >= 0.0)) throw std::invalid_argument("offset standard deviation must be non-negative");
  if (coords.empty()) return {{}, Coordinate{}};
  const std::size_t axes = coords.front().size();
  Coordinate t(axes);
  if (rho > 0.0) {
    std::normal_distribution<double> normal(0.0, rho);
    for (std::size_t k = 0; k < axes; ++k) t[k] = normal(rng);
  }
  OffsetResult out;
  out.coords.reserve(coords.size());
  for (const auto& c : coords) out.coords.push_back(c + t);
  out.offset = std::move(t);
  return out;
}

OffsetResult global_offset(std::span<const Coordinate> coords, const OffsetConfig& cfg) {
  Rng rng(cfg.seed);
  return global_offset(coords, cfg.rho, rng);
}

}  // namespace comrope::coords
