// Compares the serial reference rotation against the OpenMP kernel, and the
// kernel at one thread against all threads.
//
//   rotate_bench [n] [repeats]

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "comrope/bench.hpp"

int main(int argc, char** argv) {
  using namespace comrope;
  const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 256;
  const std::size_t repeats = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 7;

#ifdef _OPENMP
  std::cout << "openmp threads: " << omp_get_max_threads() << '\n';
#else
  std::cout << "openmp: disabled\n";
#endif
  std::cout << std::left << std::setw(8) << "variant" << std::setw(4) << "b" << std::right << std::setw(16)
            << "reference_ns" << std::setw(16) << "kernel_1t_ns" << std::setw(16) << "kernel_mt_ns" << std::setw(10)
            << "speedup" << '\n';

  for (Variant v : {Variant::LieRE, Variant::ComRoPE_AP, Variant::ComRoPE_LD}) {
    for (std::size_t b : {2u, 4u, 8u, 16u}) {
      ModelDims dims{768, 12, b, 2, 12};
      bench::TimingOptions opts;
      opts.repeats = repeats;
      opts.seed = 1;

      opts.reference_kernel = true;
      const auto ref = bench::time_rotation(v, dims, n, opts);
      opts.reference_kernel = false;
      const auto serial = bench::time_rotation(v, dims, n, opts);
      opts.parallel = true;
      const auto par = bench::time_rotation(v, dims, n, opts);

      std::cout << std::left << std::setw(8) << to_string(v) << std::setw(4) << b << std::right << std::fixed
                << std::setprecision(0) << std::setw(16) << ref.median_ns << std::setw(16) << serial.median_ns
                << std::setw(16) << par.median_ns << std::setw(10) << std::setprecision(2)
                << ref.median_ns / par.median_ns << '\n';
    }
  }
  return 0;
}
