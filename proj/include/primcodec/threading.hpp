#ifndef PRIMCODEC_THREADING_HPP_
#define PRIMCODEC_THREADING_HPP_

#include <cstddef>
#include <functional>

namespace primcodec
{

/// Global worker budget. Defaults to PRIMCODEC_THREADS (env) or the hardware
/// concurrency. Thread count never changes numeric results: every parallel
/// site writes to preassigned slots and reduces in fixed index order.
int thread_budget();
void set_thread_budget(int n);

/// Runs fn(i) for i in [0, n). Each index is processed exactly once; fn must
/// only write to state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace primcodec

#endif  // PRIMCODEC_THREADING_HPP_
