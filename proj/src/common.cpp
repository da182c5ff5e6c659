#include "gms/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace gms {

int worker_count() {
    static const int cached = [] {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n < 1) n = 1;
        if (const char* env = std::getenv("GMS_THREADS")) {
            const int cap = std::atoi(env);
            if (cap >= 1) n = std::min(n, cap);
        }
        return n;
    }();
    return cached;
}

void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index)>& fn) {
    const int workers = std::min<Eigen::Index>(worker_count(), n) > 0
                            ? static_cast<int>(std::min<Eigen::Index>(worker_count(), n))
                            : 1;
    if (workers <= 1 || n <= 1) {
        for (Eigen::Index i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (Eigen::Index i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace gms
