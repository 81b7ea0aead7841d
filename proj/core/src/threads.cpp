#include "hud/threads.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace hud {

int thread_budget() {
  const char* env = std::getenv("HUD_THREADS");
  if (env != nullptr && *env != '\0') {
    try {
      const int n = std::stoi(env);
      if (n <= 0) return 1;
      return n;
    } catch (...) {
      return 1;
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace hud
