#pragma once

#include <cstddef>
#include <vector>

namespace orbseg {

// Sets the OpenMP thread count used by every parallel kernel. n <= 0 keeps the
// runtime default.
void set_thread_count(int n);
int thread_count();

// Items per reduction block. Reductions sum each fixed block serially and then
// combine block partials in index order, so the result depends only on the
// input, never on the number of threads or their schedule.
inline constexpr std::size_t kReductionBlock = 4096;

template <class Fn>
double ordered_block_sum(std::size_t n, Fn&& term) {
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t end = begin + kReductionBlock < n ? begin + kReductionBlock : n;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace orbseg
