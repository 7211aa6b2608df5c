//
// Copyright 2026 The gsdsynth Authors
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
//

#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace gsdsynth {

// Thread count from GSDSYNTH_THREADS, falling back to the hardware count.
inline std::size_t default_thread_count() {
  if (const char* env = std::getenv("GSDSYNTH_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Fixed-size pool running static-partitioned loops. Each index range is
// assigned to a worker by position only, so any computation that writes to
// per-index slots produces the same result for every pool size.
class WorkerPool {
 public:
  using RangeFn = std::function<void(std::size_t begin, std::size_t end, std::size_t worker)>;

  explicit WorkerPool(std::size_t threads = 1) : size_(std::max<std::size_t>(1, threads)) {
    for (std::size_t w = 1; w < size_; ++w) {
      workers_.emplace_back([this, w] { worker_loop(w); });
    }
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    start_cv_.notify_all();
  }

  std::size_t size() const { return size_; }

  // Runs fn over [0, n) split into size() contiguous chunks. Worker 0 is the
  // calling thread. Rethrows the first exception raised by any chunk.
  void for_ranges(std::size_t n, const RangeFn& fn) {
    if (n == 0) return;
    if (size_ == 1 || n == 1) {
      fn(0, n, 0);
      return;
    }
    {
      std::lock_guard lock(mutex_);
      job_ = &fn;
      job_n_ = n;
      pending_ = size_ - 1;
      error_ = nullptr;
      ++epoch_;
    }
    start_cv_.notify_all();
    run_chunk(0, fn, n);
    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
  }

 private:
  void run_chunk(std::size_t w, const RangeFn& fn, std::size_t n) {
    const std::size_t begin = n * w / size_;
    const std::size_t end = n * (w + 1) / size_;
    if (begin == end) return;
    try {
      fn(begin, end, w);
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }

  void worker_loop(std::size_t w) {
    std::size_t seen = 0;
    for (;;) {
      const RangeFn* fn = nullptr;
      std::size_t n = 0;
      {
        std::unique_lock lock(mutex_);
        start_cv_.wait(lock, [&] { return stopping_ || epoch_ != seen; });
        if (stopping_) return;
        seen = epoch_;
        fn = job_;
        n = job_n_;
      }
      run_chunk(w, *fn, n);
      {
        std::lock_guard lock(mutex_);
        --pending_;
      }
      done_cv_.notify_one();
    }
  }

  std::size_t size_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const RangeFn* job_ = nullptr;
  std::size_t job_n_ = 0;
  std::size_t pending_ = 0;
  std::size_t epoch_ = 0;
  bool stopping_ = false;
  std::exception_ptr error_;
  std::vector<std::jthread> workers_;
};

}  // namespace gsdsynth
