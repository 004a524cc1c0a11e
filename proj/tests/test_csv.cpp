#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "levopt/csv.hpp"

namespace csv = levopt::csv;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("levopt_csv_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void put(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("parse basic table") {
  const auto t = csv::parse("a,b\n1,2\n3.5,-4e-3\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.n_rows() == 2);
  CHECK(t.column("a") == std::vector<double>{1.0, 3.5});
  CHECK(t.column("b") == std::vector<double>{2.0, -4e-3});
  CHECK_THROWS_AS(t.column("missing"), std::out_of_range);
}

TEST_CASE("parse accepts missing trailing newline and CRLF") {
  const auto bare = csv::parse("x\n1\n2");
  CHECK(bare.n_rows() == 2);

  const auto crlf = csv::parse("x,y\r\n1,2\r\n3,4\r\n");
  CHECK(crlf.header == std::vector<std::string>{"x", "y"});
  CHECK(crlf.column("y") == std::vector<double>{2.0, 4.0});
}

TEST_CASE("parse rejects malformed input with location") {
  CHECK_THROWS_AS(csv::parse(""), std::runtime_error);
  CHECK_THROWS_AS(csv::parse("a,b\n1\n"), std::runtime_error);       // ragged
  CHECK_THROWS_AS(csv::parse("a,b\n1,2,3\n"), std::runtime_error);   // ragged
  CHECK_THROWS_AS(csv::parse("a\nfoo\n"), std::runtime_error);       // not a number
  CHECK_THROWS_AS(csv::parse("a\n1.2.3\n"), std::runtime_error);     // trailing junk
  CHECK_THROWS_AS(csv::parse("a\n1 2\n"), std::runtime_error);
  CHECK_THROWS_AS(csv::parse("a\n\n1\n"), std::runtime_error);       // blank line

  try {
    csv::parse("a,b\n1,2\n1,oops\n");
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
}

TEST_CASE("write then read round trip") {
  TempDir dir;
  const std::vector<double> a = {1.0, -2.25, 3.3333333333333335e-7};
  const std::vector<double> b = {0.0, 1e300, -4.9406564584124654e-324};
  csv::write_file(dir.file("t.csv"), {"first", "second"}, {&a, &b});

  const auto t = csv::read_file(dir.file("t.csv"));
  REQUIRE(t.header == std::vector<std::string>{"first", "second"});
  CHECK(t.column("first") == a);   // bit-exact via shortest round-trip format
  CHECK(t.column("second") == b);

  const std::string text = slurp(dir.file("t.csv"));
  CHECK(text.find('\r') == std::string::npos);
  CHECK(!text.empty());
  CHECK(text.back() == '\n');
}

TEST_CASE("write rejects ragged columns") {
  TempDir dir;
  const std::vector<double> a = {1.0, 2.0};
  const std::vector<double> b = {1.0};
  CHECK_THROWS_AS(csv::write_file(dir.file("bad.csv"), {"a", "b"}, {&a, &b}),
                  std::invalid_argument);
}

TEST_CASE("expected header enforcement") {
  TempDir dir;
  put(dir.file("h.csv"), "time_s,x_m\n0,1\n");
  CHECK_NOTHROW(csv::read_file(dir.file("h.csv"), {"time_s", "x_m"}));
  try {
    csv::read_file(dir.file("h.csv"), {"time_s", "x_m", "v_mps"});
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("v_mps") != std::string::npos);
  }
}

TEST_CASE("read_file missing path") {
  CHECK_THROWS_AS(csv::read_file("/nonexistent/levopt.csv"),
                  std::runtime_error);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.0, 1.0, -1.5, 3.141592653589793, 1e-300, 6.62607015e-34,
                   123456789.123456789}) {
    CHECK(std::stod(csv::format_double(v)) == v);
  }
  CHECK(csv::format_double(1.0) == "1");
  CHECK(csv::format_double(0.5) == "0.5");
}
