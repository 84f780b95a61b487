#pragma once

#include <cstddef>
#include <functional>

namespace hexnet {

// Global worker pool shared by all operations. A count below 1 selects the
// hardware concurrency. Count 1 runs everything inline on the calling thread.
void set_thread_count(int count);
int thread_count();

// Partitions [begin, end) into at most thread_count() contiguous chunks and
// invokes fn(chunk_index, chunk_begin, chunk_end) for each, possibly on
// worker threads. Chunk ranges depend only on the configured thread count,
// so reductions that combine per-chunk partials in chunk-index order are
// deterministic for a fixed configuration. Exceptions thrown by fn are
// rethrown on the calling thread.
void parallel_chunks(std::size_t begin, std::size_t end,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

// Element-wise convenience over parallel_chunks.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& fn);

}  // namespace hexnet
