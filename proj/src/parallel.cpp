#include "staggdg/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace staggdg {

int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("STAGGDG_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_fn) {
  const int nw = worker_count();
  if (nw == 1 || n < 2048) {
    chunk_fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nw);
  const std::size_t per = (n + nw - 1) / nw;
  for (int w = 0; w < nw; ++w) {
    const std::size_t lo = std::min(n, w * per);
    const std::size_t hi = std::min(n, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] { chunk_fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

namespace {

constexpr std::size_t kBlock = 4096;

double pairwise(std::span<const double> blocks) {
  // reduce the block-partial array by repeated pairing; order is fixed
  std::vector<double> cur(blocks.begin(), blocks.end());
  std::size_t m = cur.size();
  while (m > 1) {
    std::size_t half = (m + 1) / 2;
    for (std::size_t i = 0; i < m / 2; ++i) cur[i] = cur[2 * i] + cur[2 * i + 1];
    if (m % 2) cur[m / 2] = cur[m - 1];
    m = half;
  }
  return m ? cur[0] : 0.0;
}

} // namespace

double det_dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nb, 0.0);
  parallel_for(nb, [&](std::size_t blo, std::size_t bhi) {
    for (std::size_t bi = blo; bi < bhi; ++bi) {
      const std::size_t lo = bi * kBlock, hi = std::min(n, lo + kBlock);
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
      partial[bi] = s;
    }
  });
  return pairwise(partial);
}

double det_sum(std::span<const double> a) {
  const std::size_t n = a.size();
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nb, 0.0);
  parallel_for(nb, [&](std::size_t blo, std::size_t bhi) {
    for (std::size_t bi = blo; bi < bhi; ++bi) {
      const std::size_t lo = bi * kBlock, hi = std::min(n, lo + kBlock);
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += a[i];
      partial[bi] = s;
    }
  });
  return pairwise(partial);
}

} // namespace staggdg
