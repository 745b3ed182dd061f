#include "kinex/parallel.hpp"

#include <cstdlib>
#include <string>

namespace kinex {

int thread_count() {
  if (const char* env = std::getenv("KINEX_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace kinex
