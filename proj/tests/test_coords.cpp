#include <gtest/gtest.h>

#include <cmath>

#include "comrope/coords.hpp"

namespace comrope::coords {
namespace {

TEST(RelativeScale, Examples) {
  const CanvasShape canvas{{224, 224}};
  const std::vector<double> mid{112, 112}, zero{0, 0}, mixed{56, 168};
  EXPECT_EQ(relative_scale(mid, canvas), (Coordinate{0.5, 0.5}));
  EXPECT_EQ(relative_scale(zero, canvas), (Coordinate{0.0, 0.0}));
  EXPECT_EQ(relative_scale(mixed, canvas), (Coordinate{0.25, 0.75}));
}

TEST(RelativeScale, ExtentMapsToOne) {
  const CanvasShape canvas{{224, 7, 3.3}};
  EXPECT_EQ(relative_scale(canvas.extent, canvas), (Coordinate{1.0, 1.0, 1.0}));
}

TEST(RelativeScale, Errors) {
  const std::vector<double> raw{1, 1};
  EXPECT_THROW(relative_scale(raw, CanvasShape{{0, 4}}), std::invalid_argument);
  EXPECT_THROW(relative_scale(raw, CanvasShape{{4}}), std::invalid_argument);
}

TEST(PatchGrid, Validation) {
  EXPECT_THROW(PatchGrid(CanvasShape{{224, 224}}, {15, 16}), std::invalid_argument);
  EXPECT_THROW(PatchGrid(CanvasShape{{224}}, {16, 16}), std::invalid_argument);
  EXPECT_THROW(PatchGrid(CanvasShape{{224}}, {0}), std::invalid_argument);
  const PatchGrid grid(CanvasShape{{224, 112}}, {16, 16});
  EXPECT_EQ(grid.counts(), (std::vector<std::size_t>{14, 7}));
  EXPECT_EQ(grid.patch_count(), 98u);
}

TEST(PatchCenters, TwoByTwoUnitCanvas) {
  const auto centers = patch_centers(PatchGrid(CanvasShape{{1, 1}}, {0.5, 0.5}));
  ASSERT_EQ(centers.size(), 4u);
  EXPECT_EQ(centers[0], (Coordinate{0.25, 0.25}));
  EXPECT_EQ(centers[1], (Coordinate{0.25, 0.75}));
  EXPECT_EQ(centers[2], (Coordinate{0.75, 0.25}));
  EXPECT_EQ(centers[3], (Coordinate{0.75, 0.75}));
}

TEST(PatchCenters, SinglePatch) {
  const auto centers = patch_centers(PatchGrid(CanvasShape{{10, 10}}, {10, 10}));
  ASSERT_EQ(centers.size(), 1u);
  EXPECT_EQ(centers[0], (Coordinate{0.5, 0.5}));
}

TEST(PatchCenters, ImageNetPatchSixteen) {
  const auto centers = patch_centers(PatchGrid(CanvasShape{{224, 224}}, {16, 16}));
  ASSERT_EQ(centers.size(), 196u);
  EXPECT_DOUBLE_EQ(centers[0][0], 8.0 / 224.0);
  EXPECT_DOUBLE_EQ(centers[0][1], 8.0 / 224.0);
  EXPECT_DOUBLE_EQ(centers[1][1], 24.0 / 224.0);
  EXPECT_DOUBLE_EQ(centers[14][0], 24.0 / 224.0);
}

TEST(Perturb, ZeroSigmaIsIdentity) {
  const PatchGrid grid(CanvasShape{{224, 224}}, {16, 16});
  const auto centers = patch_centers(grid);
  EXPECT_EQ(perturb(centers, grid, {0.0, 3}), centers);
}

TEST(Perturb, StaysWithinPatch) {
  const PatchGrid grid(CanvasShape{{64, 32, 8}}, {16, 8, 4});
  const auto centers = patch_centers(grid);
  for (double sigma : {0.1, 1.0, 10.0}) {
    const auto out = perturb(centers, grid, {sigma, 11});
    for (std::size_t p = 0; p < centers.size(); ++p)
      for (std::size_t k = 0; k < 3; ++k)
        EXPECT_LE(std::abs(out[p][k] - centers[p][k]), grid.half_width(k)) << "sigma " << sigma;
  }
}

TEST(Perturb, EmpiricalStdMatchesSigma) {
  const PatchGrid grid(CanvasShape{{224, 112}}, {16, 16});
  const Coordinate center = patch_centers(grid)[0];
  const std::vector<Coordinate> many(100000, center);
  const auto out = perturb(many, grid, {0.1, 12345});
  for (std::size_t k = 0; k < 2; ++k) {
    const double want = 0.1 * grid.patch_size()[k] / grid.canvas().extent[k];
    double sum = 0.0, sum2 = 0.0;
    for (const auto& c : out) {
      const double dx = c[k] - center[k];
      sum += dx;
      sum2 += dx * dx;
    }
    const double n = static_cast<double>(out.size());
    const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    EXPECT_NEAR(sd, want, 0.05 * want) << "axis " << k;
  }
}

TEST(Perturb, ResamplesPerCallWithSeed) {
  const PatchGrid grid(CanvasShape{{32, 32}}, {16, 16});
  const auto centers = patch_centers(grid);
  EXPECT_EQ(perturb(centers, grid, {0.5, 1}), perturb(centers, grid, {0.5, 1}));
  EXPECT_NE(perturb(centers, grid, {0.5, 1}), perturb(centers, grid, {0.5, 2}));
}

TEST(GlobalOffset, ZeroRhoIsIdentity) {
  const std::vector<Coordinate> cs{{0.1, 0.2}, {0.3, 0.4}};
  const auto r = global_offset(cs, {0.0, 5});
  EXPECT_EQ(r.coords, cs);
  EXPECT_EQ(r.offset, Coordinate(2));
}

TEST(GlobalOffset, SameShiftForEveryToken) {
  const auto cs = patch_centers(PatchGrid(CanvasShape{{64, 64}}, {16, 16}));
  const auto r = global_offset(cs, {50.0, 9});
  for (std::size_t i = 0; i < cs.size(); ++i) EXPECT_EQ(r.coords[i], cs[i] + r.offset);
  // differences survive up to one rounding of the shifted values
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = 0; j < cs.size(); ++j)
      for (std::size_t k = 0; k < 2; ++k) {
        const double before = cs[i][k] - cs[j][k];
        const double after = r.coords[i][k] - r.coords[j][k];
        EXPECT_NEAR(after, before, 4 * std::ldexp(std::abs(r.offset[k]) + 1.0, -52));
      }
}

TEST(GlobalOffset, ReproducibleForFixedSeed) {
  const std::vector<Coordinate> cs{{0.1, 0.2, 0.3}};
  const auto a = global_offset(cs, {50.0, 123});
  const auto b = global_offset(cs, {50.0, 123});
  EXPECT_EQ(a.offset, b.offset);
  EXPECT_EQ(a.coords, b.coords);
  EXPECT_NE(a.offset, global_offset(cs, {50.0, 124}).offset);
}

TEST(GlobalOffset, EmpiricalScale) {
  Rng rng(7);
  const std::vector<Coordinate> cs{{0.0}};
  double sum2 = 0.0;
  const int n = 20000;
  for (int t = 0; t < n; ++t) {
    const double v = global_offset(cs, 10.0, rng).offset[0];
    sum2 += v * v;
  }
  EXPECT_NEAR(std::sqrt(sum2 / n), 10.0, 0.3);
}

}  // namespace
}  // namespace comrope::coords
