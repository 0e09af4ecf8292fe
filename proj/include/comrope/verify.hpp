#pragma once

// Numerical theorem checks: the RoPE equation, the exponential-sum identity,
// orthogonality of the rotations, logit offset invariance and the search for
// non-commuting witnesses.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "comrope/attention.hpp"
#include "comrope/ropefamily.hpp"

namespace comrope::verify {

/// Coordinates for residual checks are drawn uniformly from this box per axis.
inline constexpr double kSampleRange = 4.0;

struct Witness {
  std::vector<double> x;
  std::vector<double> y;
  std::size_t head = 0;
};

struct VerificationReport {
  std::string suite;
  std::size_t trials = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool passed = true;  // max_residual <= tolerance
  std::uint64_t seed = 0;
  std::optional<Witness> witness;
};

/// Samples (x, y) and reports max ||R(x)^T R(y) - R(y - x)||_F over all heads.
VerificationReport check_rope_equation(const AngleMatrixSet& set, std::size_t trials, double tol,
                                       std::uint64_t seed);

/// Compares prod_a exp(x_a A_a) (axis order) with exp(sum_a x_a A_a) per block.
VerificationReport check_exp_sum_identity(const AngleMatrixSet& set, std::size_t trials, double tol,
                                          std::uint64_t seed);

/// Residual of the identity for explicit skew generators and scalars.
double exp_sum_residual(std::span<const linalg::SkewBlock> generators, std::span<const double> scalars);

/// Reports max(||R^T R - I||_F, |det R - 1|) over sampled coordinates.
VerificationReport check_orthogonality(const AngleMatrixSet& set, std::size_t trials, double tol,
                                       std::uint64_t seed);

struct OffsetDrift {
  double rho = 0.0;
  double max_drift = 0.0;
};

/// For each rho, draws global offsets t ~ N(0, rho^2 I) and reports the max
/// Frobenius drift of the logit tensor against the unshifted logits.
std::vector<OffsetDrift> check_offset_invariance(const AngleMatrixSet& set, const attention::AttentionBatch& batch,
                                                 std::span<const Coordinate> coords, std::span<const double> rhos,
                                                 std::size_t trials_per_rho, std::uint64_t seed);

/// Folds a drift table into a report against tol.
VerificationReport offset_invariance_report(std::span<const OffsetDrift> table, std::size_t trials_per_rho,
                                            double tol, std::uint64_t seed);

struct Counterexample {
  std::size_t trial = 0;  // 0-based index of the draw that produced the witness
  std::uint64_t seed = 0; // seed of that draw
  std::size_t axis_a = 0;
  std::size_t axis_b = 0;
  std::size_t head = 0;
  std::size_t block = 0;
  double residual = 0.0;  // ||[A, B]||_F
  double relative = 0.0;  // residual / (||A||_F ||B||_F)
};

/// Draws LieRE sets (seed, seed + 1, ...) until some block pair has
/// ||[A, B]||_F > 0.1 ||A||_F ||B||_F.
std::optional<Counterexample> find_noncommuting_counterexample(const ModelDims& dims, std::uint64_t seed,
                                                               std::size_t max_trials,
                                                               double init_scale = kDefaultInitScale);

}  // namespace comrope::verify
