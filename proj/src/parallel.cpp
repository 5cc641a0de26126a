#include "gtfhsr/parallel.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace gtfhsr {

int max_threads() {
  if (const char* env = std::getenv("GTF_FUSE_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index, Eigen::Index)>& chunk_fn) {
  const Eigen::Index workers = std::min<Eigen::Index>(n, max_threads());
  if (workers <= 1) {
    chunk_fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  const Eigen::Index base = n / workers, extra = n % workers;
  Eigen::Index begin = 0;
  for (Eigen::Index w = 0; w < workers; ++w) {
    const Eigen::Index end = begin + base + (w < extra ? 1 : 0);
    pool.emplace_back(chunk_fn, begin, end);
    begin = end;
  }
  for (auto& t : pool) t.join();
}

}  // namespace gtfhsr
