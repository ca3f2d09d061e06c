#include "utweak/parallel.hpp"

#include <cstdlib>
#include <string>

namespace utweak {

namespace {
std::atomic<int> g_threads{0};
}

void set_default_threads(int n) { g_threads.store(n < 0 ? 0 : n); }

int default_threads() {
    if (const int n = g_threads.load(); n > 0) return n;
    if (const char* env = std::getenv("UTWEAK_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace utweak
