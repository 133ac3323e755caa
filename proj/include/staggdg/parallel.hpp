#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace staggdg {

// Worker count: min(hardware_concurrency, STAGGDG_THREADS if set).
int worker_count();

// Static-partition parallel loop over [0, n). Each index is processed by
// exactly one worker, so writes to disjoint per-index slots are race-free
// and the result does not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_fn);

// Deterministic dot product / sum: fixed 4096-element block partials combined
// by pairwise reduction. Bitwise reproducible across runs and thread counts.
double det_dot(std::span<const double> a, std::span<const double> b);
double det_sum(std::span<const double> a);

} // namespace staggdg
