#include "primcodec/threading.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace primcodec
{

namespace
{

int initial_budget()
{
  if (const char* env = std::getenv("PRIMCODEC_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::atomic<int> g_budget{initial_budget()};

}  // namespace

int thread_budget() { return g_budget.load(); }

void set_thread_budget(int n) { g_budget.store(n >= 1 ? n : 1); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn)
{
  const int workers = thread_budget();
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  const std::size_t spawn = std::min<std::size_t>(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(spawn - 1);
  for (std::size_t t = 1; t < spawn; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
}

}  // namespace primcodec
