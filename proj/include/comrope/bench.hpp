#pragma once

// Extra-parameter accounting and rotation timing.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "comrope/ropefamily.hpp"

namespace comrope::bench {

struct ParamCount {
  Variant variant = Variant::Vanilla;
  ModelDims dims;
  std::uint64_t extra_params = 0;
};

/// Trainable scalars per layer times layers, counted from the parameter
/// layout: LieRE N*h*m*b^2, AP h*m*b^2, LD h*m*b^2 + N*h*m, vanilla 0.
ParamCount count_extra_params(Variant variant, const ModelDims& dims);

/// Closed-form totals: LieRE L*N*d*b, AP L*d*b, LD L*d*(b + N/b), vanilla 0.
/// The LD value can be fractional.
double closed_form_params(Variant variant, const ModelDims& dims);

/// Learned absolute position table, n * d.
std::uint64_t ape_params(std::size_t n, std::size_t d);

/// Scalars actually stored in a constructed set, times dims.layers.
std::uint64_t enumerate_trainable_scalars(const AngleMatrixSet& set);

inline constexpr std::size_t kMinRepeats = 5;

struct TimingRecord {
  Variant variant = Variant::Vanilla;
  ModelDims dims;
  std::size_t n = 0;
  std::size_t repeats = 0;
  double median_ns = 0.0;
  double min_ns = 0.0;
  double max_ns = 0.0;
  double per_token_ns = 0.0;  // median / n, one layer
  bool parallel = false;
};

struct TimingOptions {
  std::size_t repeats = kMinRepeats;  // raised to kMinRepeats when smaller
  std::size_t warmup = 1;
  bool parallel = false;               // false pins the kernel to one thread
  bool reference_kernel = false;       // time the serial reference path instead
  std::uint64_t seed = 0;
};

/// Wall-clock timing of rotate_qk on a random batch and set.
TimingRecord time_rotation(Variant variant, const ModelDims& dims, std::size_t n, const TimingOptions& opts = {});

/// Header: variant,d,h,b,N,n,repeats,median_ns,per_token_ns
void emit_bench_csv(std::span<const TimingRecord> records, std::ostream& os);

/// Least-squares slope of log(y) against log(x).
double fit_log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace comrope::bench
