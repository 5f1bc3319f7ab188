#include <string>
#include <vector>

#include "lassosens/cli.hpp"

int main(int argc, char** argv) {
  return lassosens::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
