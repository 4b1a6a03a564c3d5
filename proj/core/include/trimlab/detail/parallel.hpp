#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <vector>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace trimlab {

template <class R>
std::vector<R> parallel_map(std::size_t n, unsigned jobs, const std::function<R(std::size_t)>& fn) {
  std::vector<std::optional<R>> slots(n);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) slots[k].emplace(fn(k));
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k; (k = next++) < n;) {
          try {
            slots[k].emplace(fn(k));
          } catch (...) {
            std::lock_guard lock(m);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace trimlab
