/*
 * Copyright 2026 The hdfda Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hdfda/parallel.hpp"

#include "hdfda/core.hpp"

#include <omp.h>

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <mutex>
#include <thread>

namespace hdfda {

namespace {

std::atomic<int> g_explicit_limit{0};

int env_limit() {
    const char* raw = std::getenv("HDFDA_THREADS");
    if (raw == nullptr || *raw == '\0') return 0;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(raw, raw + std::strlen(raw), v);
    if (ec != std::errc() || *ptr != '\0' || v <= 0)
        throw ValidationError("HDFDA_THREADS must be a positive integer");
    return v;
}

} // namespace

void set_thread_limit(int threads) {
    if (threads < 0) throw ValidationError("thread count must be positive");
    g_explicit_limit.store(threads);
}

int thread_limit() {
    if (const int e = g_explicit_limit.load(); e > 0) return e;
    if (const int v = env_limit(); v > 0) return v;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    const int workers = thread_limit();
    if (workers <= 1 || count == 1 || omp_in_parallel()) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::mutex mu;
    std::size_t failed_index = std::numeric_limits<std::size_t>::max();
    std::exception_ptr failure;
    const auto n = static_cast<long long>(count);

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (long long i = 0; i < n; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(mu);
            if (static_cast<std::size_t>(i) < failed_index) {
                failed_index = static_cast<std::size_t>(i);
                failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace hdfda
