#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "emolex/cli.hpp"
#include "emolex/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using emolex::io::read_file;
using emolex::io::write_file_atomic;

namespace {

struct Run {
  int rc;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int rc = emolex::cli::run(args, out, err);
  return {rc, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("emolex_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("usage errors and help") {
  CHECK(cli({}).rc == 2);
  CHECK(cli({"frobnicate"}).rc == 2);
  CHECK(cli({"kappa", "--a", "/nonexistent"}).rc == 2);
  const auto help = cli({"--help"});
  CHECK(help.rc == 0);
  CHECK(help.out.find("mine-terms") != std::string::npos);
  CHECK(cli({"evaluate", "--help"}).rc == 0);
}

TEST_CASE("kappa and alpha subcommands") {
  TempDir d("kappa");
  write_file_atomic(d / "a.txt", "x\nx\ny\ny\n");
  write_file_atomic(d / "b.txt", "x\ny\ny\ny\n");
  auto r = cli({"kappa", "--a", d / "a.txt", "--b", d / "b.txt"});
  REQUIRE(r.rc == 0);
  CHECK(nlohmann::json::parse(r.out)["kappa"].get<double>() == doctest::Approx(0.5));
  CHECK(r.err.find("emolex kappa: config") != std::string::npos);

  write_file_atomic(d / "same.txt", "x\nx\n");
  r = cli({"kappa", "--a", d / "same.txt", "--b", d / "same.txt"});
  CHECK(r.rc == 1);
  CHECK(r.err.find("emolex kappa: error:") != std::string::npos);

  r = cli({"alpha", "--matrix", std::string(EMOLEX_FIXTURES) + "/alpha_12x3.tsv"});
  REQUIRE(r.rc == 0);
  const auto expected = nlohmann::json::parse(read_file(std::string(EMOLEX_FIXTURES) + "/alpha_12x3.expected.json"));
  CHECK(nlohmann::json::parse(r.out)["alpha"].get<double>() ==
        doctest::Approx(expected["alpha"].get<double>()).epsilon(1e-12));

  r = cli({"alpha", "--records", std::string(EMOLEX_FIXTURES) + "/trio_demo.jsonl", "--select-trio"});
  REQUIRE(r.rc == 0);
  CHECK(nlohmann::json::parse(r.out)["trio"] == nlohmann::json({"c2", "c4", "c5"}));
}

TEST_CASE("config file fills in flags the command line leaves out") {
  TempDir d("config");
  write_file_atomic(d / "docs.jsonl", "{\"id\":\"1\",\"text\":\"Awful, awful food\"}\n");
  write_file_atomic(d / "lex.tsv", "awful\tdisgust\t1\nawful\tnegative\t1\n");
  write_file_atomic(d / "cfg.json", nlohmann::json{{"extract", {{"lexicon", d / "lex.tsv"}, {"mode", "substring"},
                                                                {"input", d / "docs.jsonl"}}}}
                                        .dump());
  auto r = cli({"extract", "--config", d / "cfg.json", "--mode", "token"});
  REQUIRE(r.rc == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["counts"]["negative"] == 2);
  CHECK(r.err.find("\"mode\":\"token\"") != std::string::npos);

  r = cli({"extract", "--config", d / "cfg.json"});
  REQUIRE(r.rc == 0);
  CHECK(nlohmann::json::parse(r.out)["counts"]["negative"] == 2);
  CHECK(r.err.find("\"mode\":\"substring\"") != std::string::npos);

  write_file_atomic(d / "bad.json", "[1,2]");
  CHECK(cli({"extract", "--config", d / "bad.json"}).rc == 2);
}

TEST_CASE("make-tasks reports the sampled share") {
  TempDir d("tasks");
  std::string words;
  for (int i = 0; i < 5718; ++i) words += "w" + std::to_string(i) + "\n";
  write_file_atomic(d / "words.txt", words);
  auto r = cli({"make-tasks", "--words", d / "words.txt", "--sample-half", "--seed", "3", "--vocabulary", "12362",
                "--portions", "17", "--groups", "A,B,C", "--out", d / "tasks.jsonl", "--manifest", d / "m.json",
                "--summary", d / "s.json"});
  REQUIRE(r.rc == 0);
  const auto s = nlohmann::json::parse(read_file(d / "s.json"));
  CHECK(s["tasks"] == 2859);
  CHECK(s["share_of_vocabulary"] == "23.1%");
  CHECK(s["annotators"] == 51);
  CHECK(nlohmann::json::parse(read_file(d / "m.json")).size() == 51);

  // Seed is mandatory.
  CHECK(cli({"make-tasks", "--words", d / "words.txt", "--groups", "A", "--manifest", d / "m2.json"}).rc == 2);
  // More portions than tasks.
  write_file_atomic(d / "two.txt", "a\nb\n");
  CHECK(cli({"make-tasks", "--words", d / "two.txt", "--seed", "1", "--portions", "3", "--groups", "A",
             "--manifest", d / "m3.json", "--out", d / "t3.jsonl"})
            .rc == 1);
}

TEST_CASE("llm-annotate needs a transport") {
  TempDir d("llm");
  write_file_atomic(d / "w.txt", "開心\n");
  const auto r = cli({"llm-annotate", "--words", d / "w.txt"});
  CHECK(r.rc == 1);
  CHECK(r.err.find("--replay") != std::string::npos);
}
