#include "comrope/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "comrope/attention.hpp"
#include "comrope/io.hpp"

namespace comrope::bench {

ParamCount count_extra_params(Variant variant, const ModelDims& dims) {
  dims.validate(variant);
  const std::uint64_t per_axis = dims.heads * dims.blocks_per_head();
  const std::uint64_t bb = dims.block * dims.block;
  std::uint64_t per_layer = 0;
  switch (variant) {
    case Variant::Vanilla: per_layer = 0; break;
    case Variant::LieRE: per_layer = dims.axes * per_axis * bb; break;
    case Variant::ComRoPE_AP: per_layer = per_axis * bb; break;
    case Variant::ComRoPE_LD: per_layer = per_axis * bb + dims.axes * per_axis; break;
  }
  return {variant, dims, per_layer * dims.layers};
}

double closed_form_params(Variant variant, const ModelDims& dims) {
  const double L = static_cast<double>(dims.layers);
  const double N = static_cast<double>(dims.axes);
  const double d = static_cast<double>(dims.d);
  const double b = static_cast<double>(dims.block);
  switch (variant) {
    case Variant::Vanilla: return 0.0;
    case Variant::LieRE: return L * N * d * b;
    case Variant::ComRoPE_AP: return L * d * b;
    case Variant::ComRoPE_LD: return L * d * (b + N / b);
  }
  return 0.0;
}

std::uint64_t ape_params(std::size_t n, std::size_t d) { return static_cast<std::uint64_t>(n) * d; }

std::uint64_t enumerate_trainable_scalars(const AngleMatrixSet& set) {
  return static_cast<std::uint64_t>(set.params().scalar_count()) * set.dims().layers;
}

TimingRecord time_rotation(Variant variant, const ModelDims& dims, std::size_t n, const TimingOptions& opts) {
  dims.validate(variant);
  if (n == 0) throw std::invalid_argument("time_rotation: need at least one token");
  const std::size_t repeats = std::max(opts.repeats, kMinRepeats);

  Rng rng(opts.seed);
  const auto set = build_set(variant, dims, opts.seed);
  const auto batch = attention::random_batch(n, dims, rng);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Coordinate> positions;
  positions.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    Coordinate c(dims.axes);
    for (std::size_t a = 0; a < dims.axes; ++a) c[a] = uniform(rng);
    positions.push_back(std::move(c));
  }

#ifdef _OPENMP
  const int saved_threads = omp_get_max_threads();
  if (!opts.parallel) omp_set_num_threads(1);
#endif

  auto run = [&] {
    return opts.reference_kernel ? attention::reference::rotate_qk(batch, set, positions)
                                 : attention::rotate_qk(batch, set, positions);
  };
  double sink = 0.0;
  for (std::size_t w = 0; w < opts.warmup; ++w) sink += run().q.front();

  std::vector<double> samples;
  samples.reserve(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    const auto out = run();
    const auto stop = std::chrono::steady_clock::now();
    sink += out.q.front();
    samples.push_back(std::chrono::duration<double, std::nano>(stop - start).count());
  }

#ifdef _OPENMP
  omp_set_num_threads(saved_threads);
#endif
  if (!std::isfinite(sink)) throw std::runtime_error("time_rotation: kernel produced non-finite output");

  std::sort(samples.begin(), samples.end());
  TimingRecord rec;
  rec.variant = variant;
  rec.dims = dims;
  rec.n = n;
  rec.repeats = repeats;
  rec.median_ns = samples.size() % 2 == 1
                      ? samples[samples.size() / 2]
                      : 0.5 * (samples[samples.size() / 2 - 1] + samples[samples.size() / 2]);
  rec.min_ns = samples.front();
  rec.max_ns = samples.back();
  rec.per_token_ns = rec.median_ns / static_cast<double>(n);
  rec.parallel = opts.parallel;
  return rec;
}

void emit_bench_csv(std::span<const TimingRecord> records, std::ostream& os) {
  os << "variant,d,h,b,N,n,repeats,median_ns,per_token_ns\n";
  for (const auto& r : records) {
    os << to_string(r.variant) << ',' << r.dims.d << ',' << r.dims.heads << ',' << r.dims.block << ','
       << r.dims.axes << ',' << r.n << ',' << r.repeats << ',' << io::format_double(r.median_ns) << ','
       << io::format_double(r.per_token_ns) << '\n';
  }
}

double fit_log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace comrope::bench
