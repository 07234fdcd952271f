#include "khoplab/threading.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace khoplab {

int worker_count() {
  if (const char* env = std::getenv("KHOPLAB_THREADS")) {
    const int requested = std::atoi(env);
    if (requested >= 1) return requested;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_blocks(std::uint64_t blocks, const std::function<void(std::uint64_t)>& fn) {
  const int workers = worker_count();
  if (workers <= 1 || blocks <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  auto run = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= blocks) return;
      fn(b);
    }
  };
  std::vector<std::thread> pool;
  const int spawned = static_cast<int>(std::min<std::uint64_t>(blocks, static_cast<std::uint64_t>(workers)));
  pool.reserve(static_cast<std::size_t>(spawned - 1));
  for (int i = 1; i < spawned; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
}

}  // namespace khoplab
