#include "plf/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace plf {

unsigned thread_count() {
  if (const char* env = std::getenv("PLF_THREADS")) {
    try {
      long v = std::stol(env);
      return v < 1 ? 1u : static_cast<unsigned>(v);
    } catch (...) {
      return 1u;
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& fn) {
  if (n == 0) return;
  size_t workers = thread_count();
  if (workers > n) workers = n;
  if (workers == 1) {
    fn(0, n);
    return;
  }
  size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    size_t begin = w * chunk;
    size_t end = begin + chunk < n ? begin + chunk : n;
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace plf
