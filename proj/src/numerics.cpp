#include "pifs/numerics.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace pifs {

unsigned effective_thread_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PIFS_SCHED_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
    }
    return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_fn) {
    unsigned threads = effective_thread_count();
    if (n == 0) return;
    if (threads <= 1 || n < 2 * threads) {
        chunk_fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
        std::size_t end = std::min(n, begin + chunk);
        pool.emplace_back(chunk_fn, begin, end);
    }
    for (auto& t : pool) t.join();
}

}  // namespace pifs
