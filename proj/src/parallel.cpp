#include "ncc/parallel.hpp"

#include <cstdlib>
#include <string>

namespace ncc {

int configure_workers_from_env() {
  if (const char* env = std::getenv("NCC_NUM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) omp_set_num_threads(n);
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return omp_get_max_threads();
}

}  // namespace ncc
