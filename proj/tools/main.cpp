#include <vector>

#include "poseref/cli.hpp"

int main(int argc, char** argv) {
  return poseref::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
