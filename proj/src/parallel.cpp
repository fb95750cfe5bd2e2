#include "qm2arl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qm2arl {

int thread_count() {
    int count = 0;
    if (const char* env = std::getenv("QM2ARL_THREADS")) {
        try {
            count = std::stoi(env);
        } catch (const std::exception&) {
            throw std::runtime_error("QM2ARL_THREADS must be a non-negative integer");
        }
        if (count < 0) throw std::runtime_error("QM2ARL_THREADS must be a non-negative integer");
    }
    if (count == 0) {
        count = static_cast<int>(std::thread::hardware_concurrency());
    }
    return count > 0 ? count : 1;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    const int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) threads.emplace_back(body);
    body();
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace qm2arl
