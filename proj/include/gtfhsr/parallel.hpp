#pragma once

#include <Eigen/Dense>

#include <functional>

namespace gtfhsr {

/// Worker count for band-parallel loops: GTF_FUSE_THREADS when set
/// (minimum 1), otherwise the hardware concurrency.
int max_threads();

/// Runs chunk_fn(begin, end) over a partition of [0, n) on up to
/// max_threads() threads. Chunks write disjoint outputs, so results are
/// bit-identical regardless of the thread count.
void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index, Eigen::Index)>& chunk_fn);

}  // namespace gtfhsr
