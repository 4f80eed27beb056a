// Copyright 2026 The DCGN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DCGN_PARALLEL_H_
#define DCGN_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace dcgn {

// Worker count from DCGN_THREADS, else the number of hardware threads.
std::size_t default_thread_count();

// Calls fn(i) for i in [0, n) on up to `threads` threads. The first
// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace dcgn

#endif  // DCGN_PARALLEL_H_
