#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hexnet.h"

// Writes a synthetic dataset in the CIFAR-10 binary batch layout so the
// training pipeline can run where the real archive is not available. The
// images are procedurally generated class-colored patches, not CIFAR-10.
int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic dataset in CIFAR-10 binary batch layout"};
  std::string dir;
  std::uint64_t seed = 0;
  app.add_option("dir", dir, "Output directory")->required();
  app.add_option("--seed", seed, "Generator seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const hexnet_status st = hexnet_write_synthetic_cifar(dir.c_str(), seed);
  if (st != HEXNET_OK) {
    std::cerr << "error: " << hexnet_last_error() << std::endl;
    return 1;
  }
  std::cout << "wrote 5 train batches and 1 test batch to " << dir << std::endl;
  return 0;
}
