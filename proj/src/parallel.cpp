#include "convexpde/parallel.hpp"

#include <cstdlib>
#include <string>

namespace cpde {

namespace {

std::atomic<int> override_count{0};

int default_count() {
  if (const char* env = std::getenv("CONVEXPDE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int worker_count() {
  const int o = override_count.load();
  if (o >= 1) return o;
  static const int d = default_count();
  return d;
}

void set_worker_count(int n) { override_count.store(n >= 1 ? n : 0); }

}  // namespace cpde
