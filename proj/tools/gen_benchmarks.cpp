// Writes the bundled example systems under data/ as JSON partition files.

#include <cstdio>
#include <filesystem>
#include <string>

#include "pwalyap/io.hpp"

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "data";
  std::filesystem::create_directories(dir);
  for (const auto& file : pwalyap::io::shipped_benchmarks()) {
    const std::string path = dir + "/" + file.metadata.at("name") + ".json";
    pwalyap::io::save_partition_file(file, path);
    std::printf("wrote %s (%zu cells)\n", path.c_str(), file.cells.size());
  }
  return 0;
}
