#include "comrope/ropefamily.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace comrope {

using linalg::Matrix;
using linalg::SkewBlock;

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::Vanilla: return "vanilla";
    case Variant::LieRE: return "liere";
    case Variant::ComRoPE_AP: return "ap";
    case Variant::ComRoPE_LD: return "ld";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "vanilla" || s == "rope") return Variant::Vanilla;
  if (s == "liere") return Variant::LieRE;
  if (s == "ap" || s == "comrope-ap") return Variant::ComRoPE_AP;
  if (s == "ld" || s == "comrope-ld") return Variant::ComRoPE_LD;
  return std::nullopt;
}

bool is_trainable(Variant v) noexcept { return v != Variant::Vanilla; }

void ModelDims::validate(Variant v) const {
  auto fail = [](const std::string& msg) { throw DimensionError(msg); };
  if (d == 0 || heads == 0 || block == 0 || axes == 0 || layers == 0) {
    fail("dimensions must be positive");
  }
  if (d % heads != 0) fail("heads (" + std::to_string(heads) + ") must divide d (" + std::to_string(d) + ")");
  if (head_dim() % block != 0) {
    fail("block size " + std::to_string(block) + " must divide the head dimension " + std::to_string(head_dim()));
  }
  if (v == Variant::Vanilla && block != 2) fail("vanilla RoPE requires block size 2");
  if ((v == Variant::Vanilla || v == Variant::ComRoPE_AP) && blocks_per_head() % axes != 0) {
    fail("axial partition needs the axis count " + std::to_string(axes) + " to divide the " +
         std::to_string(blocks_per_head()) + " blocks per head");
  }
}

Coordinate& Coordinate::operator+=(const Coordinate& o) {
  if (o.size() != size()) throw std::invalid_argument("coordinate length mismatch");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

Coordinate& Coordinate::operator-=(const Coordinate& o) {
  if (o.size() != size()) throw std::invalid_argument("coordinate length mismatch");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

// ---------------------------------------------------------------------------
// ParamSet

std::size_t ParamSet::scalar_count() const noexcept {
  std::size_t n = thetas.size();
  for (const auto& m : matrices) n += m.data().size();
  return n;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const auto& m : matrices) out.insert(out.end(), m.data().begin(), m.data().end());
  out.insert(out.end(), thetas.begin(), thetas.end());
  return out;
}

void ParamSet::unflatten(std::span<const double> values) {
  if (values.size() != scalar_count()) throw std::invalid_argument("parameter vector length mismatch");
  std::size_t k = 0;
  for (auto& m : matrices) {
    for (double& v : m.data()) v = values[k++];
  }
  for (double& t : thetas) t = values[k++];
}

void ParamSet::axpy(double s, const ParamSet& other) {
  if (other.matrices.size() != matrices.size() || other.thetas.size() != thetas.size()) {
    throw std::invalid_argument("parameter layouts differ");
  }
  for (std::size_t i = 0; i < matrices.size(); ++i) matrices[i] += other.matrices[i] * s;
  for (std::size_t i = 0; i < thetas.size(); ++i) thetas[i] += s * other.thetas[i];
}

double ParamSet::norm() const {
  double s = 0.0;
  for (double v : flatten()) s += v * v;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// AngleMatrixSet

AngleMatrixSet::AngleMatrixSet(Variant v, const ModelDims& dims) : variant_(v), dims_(dims) {
  dims_.validate(v);
  blocks_.assign(dims_.axes * dims_.heads * dims_.blocks_per_head(), SkewBlock::zero(dims_.block));
}

namespace {

std::size_t expected_matrix_count(Variant v, const ModelDims& dims) {
  const std::size_t per_axis = dims.heads * dims.blocks_per_head();
  switch (v) {
    case Variant::Vanilla: return 0;
    case Variant::LieRE: return dims.axes * per_axis;
    case Variant::ComRoPE_AP:
    case Variant::ComRoPE_LD: return per_axis;
  }
  return 0;
}

std::size_t expected_theta_count(Variant v, const ModelDims& dims) {
  return v == Variant::ComRoPE_LD ? dims.axes * dims.heads * dims.blocks_per_head() : 0;
}

Matrix gaussian_matrix(std::size_t b, Rng& rng, double scale) {
  Matrix m(b);
  if (scale == 0.0) return m;
  std::normal_distribution<double> normal(0.0, scale);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

ParamSet random_params(Variant v, const ModelDims& dims, Rng& rng, double init_scale) {
  dims.validate(v);
  ParamSet p;
  const std::size_t count = expected_matrix_count(v, dims);
  p.matrices.reserve(count);
  for (std::size_t i = 0; i < count; ++i) p.matrices.push_back(gaussian_matrix(dims.block, rng, init_scale));
  if (v == Variant::ComRoPE_LD) {
    std::normal_distribution<double> normal(0.0, 1.0);
    p.thetas.resize(expected_theta_count(v, dims));
    for (double& t : p.thetas) t = normal(rng);
  }
  return p;
}

}  // namespace

AngleMatrixSet AngleMatrixSet::from_params(Variant variant, const ModelDims& dims, ParamSet params,
                                           std::optional<std::uint64_t> seed) {
  if (!is_trainable(variant)) throw std::invalid_argument("vanilla RoPE has no trainable parameters");
  AngleMatrixSet set(variant, dims);
  if (params.matrices.size() != expected_matrix_count(variant, dims) ||
      params.thetas.size() != expected_theta_count(variant, dims)) {
    throw DimensionError("parameter count does not match the " + std::string(to_string(variant)) + " layout");
  }
  for (const auto& m : params.matrices) {
    if (m.order() != dims.block) throw DimensionError("parameter matrix order must equal the block size");
  }
  for (double t : params.thetas) {
    if (!std::isfinite(t)) throw std::invalid_argument("scaling factors must be finite");
  }

  const std::size_t m = dims.blocks_per_head();
  for (std::size_t head = 0; head < dims.heads; ++head) {
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t hj = head * m + j;
      switch (variant) {
        case Variant::LieRE:
          for (std::size_t a = 0; a < dims.axes; ++a) {
            set.blocks_[set.index(a, head, j)] = linalg::skew_from_param(params.matrices[a * dims.heads * m + hj]);
          }
          break;
        case Variant::ComRoPE_AP:
          set.blocks_[set.index(serving_axis(j, dims.axes), head, j)] = linalg::skew_from_param(params.matrices[hj]);
          break;
        case Variant::ComRoPE_LD: {
          const SkewBlock base = linalg::skew_from_param(params.matrices[hj]);
          for (std::size_t a = 0; a < dims.axes; ++a) {
            set.blocks_[set.index(a, head, j)] = base.scaled(params.thetas[hj * dims.axes + a]);
          }
          break;
        }
        case Variant::Vanilla: break;
      }
    }
  }
  set.params_ = std::move(params);
  set.seed_ = seed;
  return set;
}

void AngleMatrixSet::generator_into(std::span<const double> x, std::size_t head, std::size_t j,
                                    std::span<double> out) const {
  const std::size_t bb = dims_.block * dims_.block;
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(bb), 0.0);
  for (std::size_t a = 0; a < dims_.axes; ++a) {
    const double xa = x[a];
    const auto src = blocks_[index(a, head, j)].matrix().data();
    for (std::size_t e = 0; e < bb; ++e) out[e] += xa * src[e];
  }
}

// ---------------------------------------------------------------------------
// Builders

double vanilla_frequency(const ModelDims& dims, double theta_base, std::size_t j1) {
  const double exponent = (2.0 * static_cast<double>(dims.axes) / static_cast<double>(dims.head_dim())) *
                          static_cast<double>(j1);
  return std::pow(theta_base, exponent);
}

AngleMatrixSet build_vanilla(const ModelDims& dims, double theta_base) {
  if (!(theta_base > 0.0) || !std::isfinite(theta_base)) {
    throw std::invalid_argument("rotation base must be positive and finite");
  }
  AngleMatrixSet set(Variant::Vanilla, dims);
  set.theta_base_ = theta_base;
  const std::size_t m = dims.blocks_per_head();
  for (std::size_t head = 0; head < dims.heads; ++head) {
    for (std::size_t j = 0; j < m; ++j) {
      const double w = vanilla_frequency(dims, theta_base, j + 1);
      set.blocks_[set.index(serving_axis(j, dims.axes), head, j)] =
          SkewBlock::from_matrix(Matrix::from_rows({{0.0, -w}, {w, 0.0}}));
    }
  }
  return set;
}

AngleMatrixSet build_liere(const ModelDims& dims, Rng& rng, double init_scale) {
  return AngleMatrixSet::from_params(Variant::LieRE, dims, random_params(Variant::LieRE, dims, rng, init_scale));
}

AngleMatrixSet build_comrope_ap(const ModelDims& dims, std::vector<Matrix> params) {
  dims.validate(Variant::ComRoPE_AP);
  return AngleMatrixSet::from_params(Variant::ComRoPE_AP, dims, ParamSet{std::move(params), {}});
}

AngleMatrixSet build_comrope_ap(const ModelDims& dims, Rng& rng, double init_scale) {
  return AngleMatrixSet::from_params(Variant::ComRoPE_AP, dims,
                                     random_params(Variant::ComRoPE_AP, dims, rng, init_scale));
}

AngleMatrixSet build_comrope_ld(const ModelDims& dims, std::vector<Matrix> bases, std::vector<double> thetas) {
  return AngleMatrixSet::from_params(Variant::ComRoPE_LD, dims, ParamSet{std::move(bases), std::move(thetas)});
}

AngleMatrixSet build_comrope_ld(const ModelDims& dims, Rng& rng, double init_scale) {
  return AngleMatrixSet::from_params(Variant::ComRoPE_LD, dims,
                                     random_params(Variant::ComRoPE_LD, dims, rng, init_scale));
}

AngleMatrixSet build_set(Variant v, const ModelDims& dims, std::uint64_t seed, double init_scale) {
  if (v == Variant::Vanilla) return build_vanilla(dims);
  Rng rng(seed);
  return AngleMatrixSet::from_params(v, dims, random_params(v, dims, rng, init_scale), seed);
}

// ---------------------------------------------------------------------------
// Rotation

linalg::BlockRotation rotation_blocks(const AngleMatrixSet& set, const Coordinate& x, std::size_t head) {
  const ModelDims& dims = set.dims();
  if (x.size() != dims.axes) {
    throw std::invalid_argument("coordinate has " + std::to_string(x.size()) + " axes, set expects " +
                                std::to_string(dims.axes));
  }
  if (head >= dims.heads) throw std::out_of_range("head index out of range");
  const std::size_t b = dims.block;
  std::vector<double> gen(b * b);
  std::vector<double> scratch(linalg::kernel::expm_scratch_size(b));
  std::vector<linalg::RotationMatrix> rs;
  rs.reserve(dims.blocks_per_head());
  for (std::size_t j = 0; j < dims.blocks_per_head(); ++j) {
    set.generator_into(x.values(), head, j, gen);
    Matrix r(b);
    linalg::kernel::expm_skew(b, gen.data(), r.data().data(), scratch.data());
    rs.push_back(linalg::RotationMatrix::adopt(std::move(r)));
  }
  return linalg::BlockRotation(std::move(rs));
}

linalg::RotationMatrix rotation(const AngleMatrixSet& set, const Coordinate& x, std::size_t head) {
  return rotation_blocks(set, x, head).dense();
}

CommutingCheck is_pairwise_commuting(const AngleMatrixSet& set, double tol) {
  const ModelDims& dims = set.dims();
  CommutingCheck out;
  for (std::size_t head = 0; head < dims.heads; ++head) {
    for (std::size_t j = 0; j < dims.blocks_per_head(); ++j) {
      for (std::size_t a = 0; a < dims.axes; ++a) {
        for (std::size_t c = a + 1; c < dims.axes; ++c) {
          const double r =
              linalg::commutator_residual(set.block(a, head, j).matrix(), set.block(c, head, j).matrix());
          out.max_residual = std::max(out.max_residual, r);
        }
      }
    }
  }
  out.commuting = out.max_residual <= tol;
  return out;
}

}  // namespace comrope
