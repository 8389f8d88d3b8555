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

#ifndef HDFDA_PARALLEL_HPP
#define HDFDA_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <functional>

namespace hdfda {

/// Caps the worker count. 0 restores the default: HDFDA_THREADS if set,
/// otherwise the hardware concurrency.
void set_thread_limit(int threads);

/// Effective worker count after applying the explicit limit and environment.
int thread_limit();

/// Runs body(index) for index in [0, count). Each index is executed exactly
/// once; callers write results to disjoint slots, so output never depends on
/// the schedule. Nested calls run serially on the calling worker. If any body
/// throws, the exception from the lowest failing index is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace hdfda

#endif // HDFDA_PARALLEL_HPP
