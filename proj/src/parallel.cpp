#include "pdgplay/parallel.hpp"

#include <atomic>

#include <omp.h>

namespace pdgplay {

namespace {
std::atomic<int> g_cap{0};
}

void set_thread_cap(int n) { g_cap.store(n > 0 ? n : 0); }

int thread_cap() {
  const int cap = g_cap.load();
  return cap > 0 ? cap : omp_get_max_threads();
}

}  // namespace pdgplay
