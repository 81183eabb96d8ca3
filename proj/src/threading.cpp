#include "holescope/threading.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace holescope {

int max_threads() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* cap = std::getenv("HOLESCOPE_THREADS")) {
        try {
            const int requested = std::stoi(cap);
            if (requested >= 1) hw = std::min(hw, requested);
        } catch (const std::exception&) {
            // unparseable cap: ignore
        }
    }
    return hw;
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& chunk_fn) {
    if (n == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(std::max(threads, 1), n);
    if (workers <= 1) {
        chunk_fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&chunk_fn, begin, end] { chunk_fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace holescope
