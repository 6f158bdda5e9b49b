// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace ttt {

/// 0 means "all hardware threads".
inline std::size_t resolve_threads(std::size_t requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Thread count implied by TTT_LAB_THREADS (unset or 0 = auto).
inline std::size_t threads_from_env() {
  const char* raw = std::getenv("TTT_LAB_THREADS");
  if (raw == nullptr || *raw == '\0') return resolve_threads(0);
  try {
    return resolve_threads(static_cast<std::size_t>(std::stoul(raw)));
  } catch (const std::exception&) {
    return 1;
  }
}

/// Runs body(i) for i in [0, count) over contiguous blocks. The body must only
/// write to slot i of its outputs; the first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::min(resolve_threads(threads), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> failures(threads);
  std::vector<std::thread> workers;
  workers.reserve(threads);
  const std::size_t block = (count + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        const std::size_t end = std::min(count, (w + 1) * block);
        for (std::size_t i = w * block; i < end; ++i) body(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& worker : workers) worker.join();
  for (auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
}

}  // namespace ttt
