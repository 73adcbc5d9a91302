/*
 * Copyright 2026 The ulcerseg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <functional>

namespace ulcerseg {

// Worker count: ULCERSEG_THREADS if set and > 0, otherwise the hardware
// concurrency (at least 1).
int WorkerThreads();

// Runs fn(i) for i in [0, n). Each index is visited exactly once; callers
// must write results into per-index slots so the output does not depend on
// scheduling. The first exception thrown by any worker is rethrown.
void ParallelFor(size_t n, const std::function<void(size_t)>& fn);

}  // namespace ulcerseg
