#include "comrope/toytask.hpp"

#include <cmath>
#include <random>

#include "comrope/io.hpp"

namespace comrope::toytask {

namespace {

// Keeps the teacher's stream disjoint from the data stream.
constexpr std::uint64_t kTeacherSeedSalt = 0x9e3779b97f4a7c15ull;

std::size_t logit_count(const ToyDataset& data) {
  std::size_t n = 0;
  for (const auto& s : data.samples) n += s.target.values.size();
  return n;
}

double squared_error(const attention::LogitTensor& out, const attention::LogitTensor& target) {
  double s = 0.0;
  for (std::size_t e = 0; e < out.values.size(); ++e) {
    const double d = out.values[e] - target.values[e];
    s += d * d;
  }
  return s;
}

}  // namespace

ToyDataset gen_synthetic(std::size_t n_tokens, const ModelDims& dims, std::size_t n_samples, std::uint64_t seed) {
  dims.validate(Variant::ComRoPE_LD);
  ToyDataset data;
  data.dims = dims;
  data.seed = seed;
  const std::uint64_t teacher_seed = seed ^ kTeacherSeedSalt;
  data.target_template = "teacher comrope-ld logits q_i^T R(x_j - x_i) k_j; teacher seed " +
                         std::to_string(teacher_seed) + ", base init scale " + io::format_double(kTeacherInitScale);
  if (n_samples == 0) return data;

  const auto teacher = build_set(Variant::ComRoPE_LD, dims, teacher_seed, kTeacherInitScale);
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  data.samples.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    ToySample sample;
    sample.coords.reserve(n_tokens);
    for (std::size_t t = 0; t < n_tokens; ++t) {
      Coordinate c(dims.axes);
      for (std::size_t a = 0; a < dims.axes; ++a) c[a] = uniform(rng);
      sample.coords.push_back(std::move(c));
    }
    sample.batch = attention::random_batch(n_tokens, dims, rng);
    sample.target = attention::logits(attention::rotate_qk(sample.batch, teacher, sample.coords));
    data.samples.push_back(std::move(sample));
  }
  return data;
}

double evaluate(const ToyDataset& data, const AngleMatrixSet& set) {
  const std::size_t count = logit_count(data);
  if (count == 0) return 0.0;
  double sum = 0.0;
  for (const auto& s : data.samples) {
    sum += squared_error(attention::logits(attention::rotate_qk(s.batch, set, s.coords)), s.target);
  }
  return sum / static_cast<double>(count);
}

double evaluate_shifted(const ToyDataset& data, const AngleMatrixSet& set, const coords::OffsetConfig& cfg) {
  const std::size_t count = logit_count(data);
  if (count == 0) return 0.0;
  Rng rng(cfg.seed);
  double sum = 0.0;
  for (const auto& s : data.samples) {
    const auto shifted = coords::global_offset(s.coords, cfg.rho, rng);
    sum += squared_error(attention::logits(attention::rotate_qk(s.batch, set, shifted.coords)), s.target);
  }
  return sum / static_cast<double>(count);
}

std::pair<double, ParamSet> loss_and_grad(const ToyDataset& data, const AngleMatrixSet& set) {
  ParamSet grad = set.params();
  for (auto& m : grad.matrices) m *= 0.0;
  for (auto& t : grad.thetas) t = 0.0;
  const std::size_t count = logit_count(data);
  if (count == 0) return {0.0, grad};

  const double inv = 1.0 / static_cast<double>(count);
  double sum = 0.0;
  for (const auto& s : data.samples) {
    const auto out = attention::logits(attention::rotate_qk(s.batch, set, s.coords));
    attention::LogitTensor upstream(out.heads, out.n);
    for (std::size_t e = 0; e < out.values.size(); ++e) {
      const double d = out.values[e] - s.target.values[e];
      sum += d * d;
      upstream.values[e] = 2.0 * d * inv;
    }
    grad.axpy(1.0, attention::logit_grad_params(s.batch, set, s.coords, upstream));
  }
  return {sum * inv, grad};
}

TrainResult train_from(const ToyDataset& data, AngleMatrixSet start, const TrainOptions& opts) {
  if (!is_trainable(start.variant())) throw std::invalid_argument("vanilla RoPE has no trainable parameters");
  TrainResult result{{}, std::move(start)};
  result.trace.reserve(opts.steps);
  for (std::size_t step = 0; step < opts.steps; ++step) {
    auto [loss, grad] = loss_and_grad(data, result.set);
    const double gnorm = grad.norm();
    if (!std::isfinite(loss) || !std::isfinite(gnorm)) {
      throw TrainingDiverged(step, "training diverged at step " + std::to_string(step));
    }
    result.trace.push_back({step, loss, gnorm});
    if (opts.lr == 0.0) continue;
    ParamSet next = result.set.params();
    next.axpy(-opts.lr, grad);
    for (double v : next.flatten()) {
      if (!std::isfinite(v)) throw TrainingDiverged(step, "parameters became non-finite at step " + std::to_string(step));
    }
    result.set = AngleMatrixSet::from_params(result.set.variant(), result.set.dims(), std::move(next),
                                             result.set.seed());
  }
  return result;
}

TrainResult train(const ToyDataset& data, Variant variant, const TrainOptions& opts) {
  if (!is_trainable(variant)) throw std::invalid_argument("vanilla RoPE has no trainable parameters");
  return train_from(data, build_set(variant, data.dims, opts.seed, opts.init_scale), opts);
}

void emit_trace_csv(const TrainTrace& trace, std::ostream& os) {
  os << "step,loss,grad_norm\n";
  for (const auto& e : trace) {
    os << e.step << ',' << io::format_double(e.loss) << ',' << io::format_double(e.grad_norm) << '\n';
  }
}

}  // namespace comrope::toytask
