#pragma once

#include <cstdint>
#include <functional>

namespace mtim {

/// Worker count used by data-parallel loops. Resolution order: explicit
/// set_worker_count(), MTIM_WORKERS environment variable, hardware concurrency.
int worker_count();
void set_worker_count(int n);

/// Runs fn(i) for i in [begin, end) across workers. Each index is processed
/// exactly once and writes only to its own outputs, so results do not depend
/// on the worker count.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn);

/// Chunked variant: fn(chunk_begin, chunk_end) over contiguous ranges.
void parallel_for_chunks(int64_t begin, int64_t end,
                         const std::function<void(int64_t, int64_t)>& fn);

}  // namespace mtim
