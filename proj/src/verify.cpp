#include "comrope/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "comrope/coords.hpp"

namespace comrope::verify {

using linalg::Matrix;
using linalg::SkewBlock;

namespace {

std::vector<Coordinate> sample_coordinates(std::size_t count, std::size_t axes, Rng& rng) {
  std::uniform_real_distribution<double> uniform(-kSampleRange, kSampleRange);
  std::vector<Coordinate> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Coordinate c(axes);
    for (std::size_t a = 0; a < axes; ++a) c[a] = uniform(rng);
    out.push_back(std::move(c));
  }
  return out;
}

struct TrialMax {
  double value = 0.0;
  std::size_t index = 0;
};

// Deterministic max keyed by trial index; ties keep the earliest trial.
TrialMax reduce_max(const std::vector<double>& residuals) {
  TrialMax best;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    if (residuals[i] > best.value) best = {residuals[i], i};
  }
  return best;
}

VerificationReport make_report(std::string suite, std::size_t trials, double tol, std::uint64_t seed,
                               double max_residual) {
  VerificationReport r;
  r.suite = std::move(suite);
  r.trials = trials;
  r.tolerance = tol;
  r.seed = seed;
  r.max_residual = max_residual;
  r.passed = max_residual <= tol;
  return r;
}

}  // namespace

VerificationReport check_rope_equation(const AngleMatrixSet& set, std::size_t trials, double tol,
                                       std::uint64_t seed) {
  const ModelDims& dims = set.dims();
  Rng rng(seed);
  const auto xs = sample_coordinates(trials, dims.axes, rng);
  const auto ys = sample_coordinates(trials, dims.axes, rng);

  std::vector<double> residual(trials, 0.0);
  std::vector<std::size_t> worst_head(trials, 0);
  const auto count = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ti = 0; ti < count; ++ti) {
    const auto t = static_cast<std::size_t>(ti);
    for (std::size_t h = 0; h < dims.heads; ++h) {
      const auto rx = rotation_blocks(set, xs[t], h);
      const auto ry = rotation_blocks(set, ys[t], h);
      const auto rd = rotation_blocks(set, ys[t] - xs[t], h);
      double sq = 0.0;
      for (std::size_t j = 0; j < rx.block_count(); ++j) {
        const Matrix diff = rx.block(j).matrix().transpose() * ry.block(j).matrix() - rd.block(j).matrix();
        const double f = diff.frobenius_norm();
        sq += f * f;
      }
      const double r = std::sqrt(sq);
      if (r > residual[t]) {
        residual[t] = r;
        worst_head[t] = h;
      }
    }
  }

  const TrialMax best = reduce_max(residual);
  auto report = make_report("rope-equation", trials, tol, seed, best.value);
  if (trials > 0) {
    const auto& x = xs[best.index];
    const auto& y = ys[best.index];
    report.witness = Witness{{x.values().begin(), x.values().end()}, {y.values().begin(), y.values().end()},
                             worst_head[best.index]};
  }
  return report;
}

double exp_sum_residual(std::span<const SkewBlock> generators, std::span<const double> scalars) {
  if (generators.empty() || generators.size() != scalars.size()) {
    throw std::invalid_argument("exp_sum_residual: need one scalar per generator");
  }
  const std::size_t b = generators.front().order();
  Matrix product = Matrix::identity(b);
  SkewBlock sum = SkewBlock::zero(b);
  for (std::size_t a = 0; a < generators.size(); ++a) {
    product = product * linalg::expm_skew(generators[a], scalars[a]).matrix();
    sum.add_scaled(generators[a], scalars[a]);
  }
  return (product - linalg::expm_skew(sum).matrix()).frobenius_norm();
}

VerificationReport check_exp_sum_identity(const AngleMatrixSet& set, std::size_t trials, double tol,
                                          std::uint64_t seed) {
  const ModelDims& dims = set.dims();
  Rng rng(seed);
  const auto xs = sample_coordinates(trials, dims.axes, rng);

  std::vector<double> residual(trials, 0.0);
  std::vector<std::size_t> worst_head(trials, 0);
  const auto count = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ti = 0; ti < count; ++ti) {
    const auto t = static_cast<std::size_t>(ti);
    std::vector<SkewBlock> gens(dims.axes);
    for (std::size_t h = 0; h < dims.heads; ++h) {
      double sq = 0.0;
      for (std::size_t j = 0; j < dims.blocks_per_head(); ++j) {
        for (std::size_t a = 0; a < dims.axes; ++a) gens[a] = set.block(a, h, j);
        const double r = exp_sum_residual(gens, xs[t].values());
        sq += r * r;
      }
      const double r = std::sqrt(sq);
      if (r > residual[t]) {
        residual[t] = r;
        worst_head[t] = h;
      }
    }
  }

  const TrialMax best = reduce_max(residual);
  auto report = make_report("exp-sum", trials, tol, seed, best.value);
  if (trials > 0) {
    const auto& x = xs[best.index];
    report.witness = Witness{{x.values().begin(), x.values().end()}, {}, worst_head[best.index]};
  }
  return report;
}

VerificationReport check_orthogonality(const AngleMatrixSet& set, std::size_t trials, double tol,
                                       std::uint64_t seed) {
  const ModelDims& dims = set.dims();
  Rng rng(seed);
  const auto xs = sample_coordinates(trials, dims.axes, rng);

  std::vector<double> residual(trials, 0.0);
  const auto count = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ti = 0; ti < count; ++ti) {
    const auto t = static_cast<std::size_t>(ti);
    for (std::size_t h = 0; h < dims.heads; ++h) {
      const auto r = rotation_blocks(set, xs[t], h);
      double sq = 0.0;
      double det = 1.0;
      for (std::size_t j = 0; j < r.block_count(); ++j) {
        const double f = r.block(j).orthogonality_defect();
        sq += f * f;
        det *= linalg::determinant(r.block(j).matrix());
      }
      residual[t] = std::max({residual[t], std::sqrt(sq), std::abs(det - 1.0)});
    }
  }

  const TrialMax best = reduce_max(residual);
  auto report = make_report("orthogonality", trials, tol, seed, best.value);
  if (trials > 0) {
    const auto& x = xs[best.index];
    report.witness = Witness{{x.values().begin(), x.values().end()}, {}, 0};
  }
  return report;
}

std::vector<OffsetDrift> check_offset_invariance(const AngleMatrixSet& set, const attention::AttentionBatch& batch,
                                                 std::span<const Coordinate> coords, std::span<const double> rhos,
                                                 std::size_t trials_per_rho, std::uint64_t seed) {
  const auto baseline = attention::logits(attention::rotate_qk(batch, set, coords));
  Rng rng(seed);
  std::vector<OffsetDrift> out;
  out.reserve(rhos.size());
  for (double rho : rhos) {
    OffsetDrift row{rho, 0.0};
    for (std::size_t t = 0; t < trials_per_rho; ++t) {
      const auto shifted = coords::global_offset(coords, rho, rng);
      const auto moved = attention::logits(attention::rotate_qk(batch, set, shifted.coords));
      row.max_drift = std::max(row.max_drift, attention::frobenius_distance(moved, baseline));
    }
    out.push_back(row);
  }
  return out;
}

VerificationReport offset_invariance_report(std::span<const OffsetDrift> table, std::size_t trials_per_rho,
                                            double tol, std::uint64_t seed) {
  double worst = 0.0;
  for (const auto& row : table) worst = std::max(worst, row.max_drift);
  return make_report("offset-invariance", table.size() * trials_per_rho, tol, seed, worst);
}

std::optional<Counterexample> find_noncommuting_counterexample(const ModelDims& dims, std::uint64_t seed,
                                                               std::size_t max_trials, double init_scale) {
  for (std::size_t trial = 0; trial < max_trials; ++trial) {
    const std::uint64_t draw_seed = seed + trial;
    const auto set = build_set(Variant::LieRE, dims, draw_seed, init_scale);
    std::optional<Counterexample> best;
    for (std::size_t h = 0; h < dims.heads; ++h) {
      for (std::size_t j = 0; j < dims.blocks_per_head(); ++j) {
        for (std::size_t a = 0; a < dims.axes; ++a) {
          for (std::size_t c = a + 1; c < dims.axes; ++c) {
            const Matrix& ma = set.block(a, h, j).matrix();
            const Matrix& mc = set.block(c, h, j).matrix();
            const double scale = ma.frobenius_norm() * mc.frobenius_norm();
            const double r = linalg::commutator_residual(ma, mc);
            if (scale > 0.0 && r > 0.1 * scale && (!best || r > best->residual)) {
              best = Counterexample{trial, draw_seed, a, c, h, j, r, r / scale};
            }
          }
        }
      }
    }
    if (best) return best;
  }
  return std::nullopt;
}

}  // namespace comrope::verify
