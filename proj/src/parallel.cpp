#include "mtim/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace mtim {

namespace {
std::atomic<int> g_workers{0};

int resolve_workers() {
    int n = g_workers.load();
    if (n > 0) return n;
    if (const char* env = std::getenv("MTIM_WORKERS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}
}  // namespace

int worker_count() { return resolve_workers(); }

void set_worker_count(int n) { g_workers.store(n); }

void parallel_for_chunks(int64_t begin, int64_t end,
                         const std::function<void(int64_t, int64_t)>& fn) {
    const int64_t total = end - begin;
    if (total <= 0) return;
    int workers = resolve_workers();
    if (workers <= 1 || total == 1) {
        fn(begin, end);
        return;
    }
    if (workers > total) workers = static_cast<int>(total);
    // Static contiguous split: chunk boundaries depend only on (total, workers),
    // and results are worker-count independent because indices do not share outputs.
    std::vector<std::thread> threads;
    threads.reserve(workers);
    const int64_t base = total / workers;
    const int64_t rem = total % workers;
    int64_t cursor = begin;
    for (int w = 0; w < workers; ++w) {
        const int64_t len = base + (w < rem ? 1 : 0);
        const int64_t lo = cursor;
        const int64_t hi = cursor + len;
        cursor = hi;
        threads.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : threads) t.join();
}

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn) {
    parallel_for_chunks(begin, end, [&fn](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) fn(i);
    });
}

}  // namespace mtim
