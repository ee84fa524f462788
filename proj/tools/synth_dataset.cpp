// Writes a synthetic two-class cell-image dataset for smoke runs and tests.

#include <CLI11.hpp>

#include <iostream>

#include "rdae/error.hpp"
#include "rdae/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic cell-image dataset"};
  std::string root;
  std::size_t count = 200;
  std::uint64_t seed = 7;
  bool fixed = false;
  app.add_option("root", root, "Output directory")->required();
  app.add_option("-n,--count", count, "Number of images")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Generator seed");
  app.add_flag("--fixed-size", fixed, "Write every image at 128x128");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    rdae::write_synthetic_dataset(root, count, seed, fixed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "wrote " << count << " images under " << root << "\n";
  return 0;
}
