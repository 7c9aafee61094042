#include <cstdlib>

#include "doctest.h"
#include "pipeline.hpp"

namespace fs = std::filesystem;
using emolex::io::read_file;

TEST_CASE("end-to-end run is reproducible and matches the goldens") {
  const fs::path fixtures = EMOLEX_FIXTURES;
  const fs::path golden = fs::path(EMOLEX_FIXTURES) / ".." / "golden" / "e2e";
  const fs::path a = fs::temp_directory_path() / "emolex_e2e_a";
  const fs::path b = fs::temp_directory_path() / "emolex_e2e_b";
  pipeline::run(fixtures, a);
  pipeline::run(fixtures, b);

  if (std::getenv("EMOLEX_UPDATE_GOLDEN")) {
    fs::create_directories(golden);
    for (const auto& name : pipeline::kOutputs) fs::copy_file(a / name, golden / name, fs::copy_options::overwrite_existing);
  }
  for (const auto& name : pipeline::kOutputs) {
    CAPTURE(name);
    REQUIRE(fs::exists(a / name));
    CHECK(read_file(a / name) == read_file(b / name));
    REQUIRE(fs::exists(golden / name));
    CHECK(read_file(a / name) == read_file(golden / name));
  }

  // Mined terms follow the independent ranking oracle.
  std::string mined;
  for (const auto& line : emolex::io::split_lines(read_file(a / "terms.tsv"))) {
    if (!line.empty()) mined += std::string(line.substr(0, line.find('\t'))) + "\n";
  }
  CHECK(mined == read_file(fixtures / "pipeline" / "terms.expected.txt"));
  fs::remove_all(a);
  fs::remove_all(b);
}
