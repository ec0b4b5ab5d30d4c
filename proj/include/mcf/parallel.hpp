#pragma once

#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include <omp.h>

namespace mcf {

/// Resolves a requested thread count: positive values win, then MCF_THREADS,
/// then the OpenMP default. Inside an enclosing parallel region the answer is
/// always 1 so that nested loops run serially.
inline int resolve_threads(int requested) {
  if (omp_in_parallel()) return 1;
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MCF_THREADS")) {
    try {
      const int value = std::stoi(env);
      if (value > 0) return value;
    } catch (...) {
    }
  }
  return omp_get_max_threads();
}

/// Calls body(i) for i in [0, n). With one thread this is a plain loop (the
/// serial reference path); otherwise iterations are distributed dynamically.
/// Bodies must write only to slot i so results do not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, int requested_threads, Body&& body) {
  const int threads = resolve_threads(requested_threads);
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  // Exceptions may not leave an OpenMP region; the lowest failing index is
  // rethrown after the join so the reported error is scheduling independent.
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

}  // namespace mcf
