#ifndef CAPAX_PARALLEL_HPP
#define CAPAX_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace capax {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots; the first failing index (lowest i) is rethrown.
template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace capax

#endif  // CAPAX_PARALLEL_HPP
