#include "enkbf/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace enkbf {
namespace {

std::atomic<int> g_threads{0};  // 0 = use hardware concurrency

int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

thread_local bool t_inside_parallel = false;

} // namespace

void set_thread_count(int n) {
    // n >= 1 pins the pool width; anything else restores the default.
    g_threads.store(n >= 1 ? n : 0, std::memory_order_relaxed);
}

int thread_count() {
    const int n = g_threads.load(std::memory_order_relaxed);
    return n >= 1 ? n : default_threads();
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    const int workers = std::min(thread_count(), n);
    if (workers <= 1 || t_inside_parallel) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    // Contiguous chunks; chunk boundaries depend only on (n, workers), and
    // bodies write disjoint slots, so the work split never affects results.
    std::mutex error_mutex;
    std::exception_ptr error;
    auto run_chunk = [&](int w) {
        t_inside_parallel = true;
        const int lo = static_cast<int>(std::int64_t(n) * w / workers);
        const int hi = static_cast<int>(std::int64_t(n) * (w + 1) / workers);
        try {
            for (int i = lo; i < hi; ++i) fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
        t_inside_parallel = false;
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(run_chunk, w);
    run_chunk(0);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace enkbf
