// Copyright 2026 The DualScribe Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>

namespace dualscribe {

// Worker count for data-parallel stages: DUALSCRIBE_THREADS when set to a
// positive integer, otherwise the hardware concurrency (at least 1).
std::size_t WorkerCount();

// Calls fn(i) for every i in [0, n). Work is partitioned into contiguous
// chunks across WorkerCount() threads; callers write results into
// per-index slots and reduce them in index order afterwards, so the outcome
// does not depend on the thread count. The first exception thrown by any
// call is rethrown on the calling thread.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dualscribe
