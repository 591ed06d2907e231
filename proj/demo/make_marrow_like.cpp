// Writes marrow_like.csv and marrow_like.schema.json into the given directory.
//
//   make_marrow_like <dir> [seed]
//   pmmp fit --data <dir>/marrow_like.csv --schema <dir>/marrow_like.schema.json
//            --drop-incomplete --standardize --log-response --out-dir fit
//   pmmp predict --model fit/model.json --data <dir>/marrow_like.csv --drop-incomplete --mse --out-dir pred

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "marrow_like.hpp"

int main(int argc, char** argv) {
  if (argc < 2 || std::string(argv[1]).starts_with("-")) {
    std::cerr << "usage: make_marrow_like <dir> [seed]\n";
    return 2;
  }
  const std::filesystem::path dir(argv[1]);
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 2024;
  std::filesystem::create_directories(dir);
  pmmp::io::write_file_atomic(dir / "marrow_like.csv", marrow::make_csv(seed));
  pmmp::io::write_file_atomic(dir / "marrow_like.schema.json", pmmp::schema_to_json(marrow::schema()).dump(2) + "\n");
  std::cout << "wrote " << (dir / "marrow_like.csv").string() << "\n";
  return 0;
}
