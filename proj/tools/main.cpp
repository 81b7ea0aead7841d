#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
  return hud::cli::dispatch(std::vector<std::string>(argv + 1, argv + argc));
}
