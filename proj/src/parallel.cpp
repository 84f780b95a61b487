#include "hexnet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hexnet {
namespace {

int resolve(int count) {
  if (count >= 1) return count;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Persistent pool of worker threads fed one job generation at a time.
// Workers claim chunk indices from a shared counter; the caller participates
// and then waits for the generation to drain.
class Pool {
public:
  ~Pool() { shutdown(); }

  void resize(int workers) {
    shutdown();
    std::lock_guard<std::mutex> lock(mutex_);
    stop_ = false;
    for (int i = 0; i < workers; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  void run(std::size_t chunk_count, const std::function<void(std::size_t)>& chunk_fn) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      job_ = &chunk_fn;
      chunk_count_ = chunk_count;
      next_chunk_.store(0, std::memory_order_relaxed);
      pending_.store(chunk_count, std::memory_order_relaxed);
      error_ = nullptr;
      ++generation_;
    }
    work_ready_.notify_all();
    drain();
    {
      std::unique_lock<std::mutex> lock(mutex_);
      done_.wait(lock, [this] { return pending_.load(std::memory_order_acquire) == 0; });
      job_ = nullptr;
      if (error_) {
        auto err = error_;
        error_ = nullptr;
        std::rethrow_exception(err);
      }
    }
  }

private:
  void drain() {
    for (;;) {
      const std::size_t chunk = next_chunk_.fetch_add(1, std::memory_order_relaxed);
      if (chunk >= chunk_count_) break;
      try {
        (*job_)(chunk);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!error_) error_ = std::current_exception();
      }
      if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        done_.notify_all();
      }
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lock(mutex_);
        work_ready_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      drain();
    }
  }

  void shutdown() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    work_ready_.notify_all();
    for (auto& t : threads_) t.join();
    threads_.clear();
  }

  std::mutex mutex_;
  std::condition_variable work_ready_;
  std::condition_variable done_;
  std::vector<std::thread> threads_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t chunk_count_ = 0;
  std::atomic<std::size_t> next_chunk_{0};
  std::atomic<std::size_t> pending_{0};
  std::exception_ptr error_;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

std::mutex g_config_mutex;
int g_thread_count = 1;
Pool* g_pool = nullptr;

}  // namespace

void set_thread_count(int count) {
  std::lock_guard<std::mutex> lock(g_config_mutex);
  const int resolved = resolve(count);
  if (resolved == g_thread_count) return;
  g_thread_count = resolved;
  delete g_pool;
  g_pool = nullptr;
  if (resolved > 1) {
    g_pool = new Pool();
    g_pool->resize(resolved - 1);
  }
}

int thread_count() {
  std::lock_guard<std::mutex> lock(g_config_mutex);
  return g_thread_count;
}

void parallel_chunks(std::size_t begin, std::size_t end,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (begin >= end) return;
  const std::size_t items = end - begin;
  Pool* pool = nullptr;
  std::size_t chunks = 1;
  {
    std::lock_guard<std::mutex> lock(g_config_mutex);
    chunks = std::min<std::size_t>(static_cast<std::size_t>(g_thread_count), items);
    pool = g_pool;
  }
  if (chunks <= 1 || pool == nullptr) {
    fn(0, begin, end);
    return;
  }
  const std::size_t base = items / chunks;
  const std::size_t extra = items % chunks;
  auto chunk_fn = [&](std::size_t c) {
    const std::size_t lo = begin + c * base + std::min(c, extra);
    const std::size_t hi = lo + base + (c < extra ? 1 : 0);
    fn(c, lo, hi);
  };
  pool->run(chunks, chunk_fn);
}

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& fn) {
  parallel_chunks(begin, end, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) fn(i);
  });
}

}  // namespace hexnet
