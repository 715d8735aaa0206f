// CSV round-trip, quoting, and error-reporting tests. The oracle for the
// writer is a hand-assembled expected byte string; the reader is checked
// against both its own writer (bitwise round trip) and foreign inputs with
// CRLF endings and quoted fields.
#include <doctest.h>

#include "gplfm/csv_io.hpp"

#include <cstdio>
#include <filesystem>
#include <random>

using namespace gplfm;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("writer emits RFC-4180 quoting and exact numbers") {
  CsvTable table;
  Eigen::VectorXd a(2), b(2);
  a << 1.5, -0.25;
  b << 3.0, 4.0;
  table.add_column("plain [s]", a);
  table.add_column("with, comma", b);

  const std::string expected =
      "plain [s],\"with, comma\"\n"
      "1.5,3\n"
      "-0.25,4\n";
  CHECK(to_csv_string(table) == expected);

  CsvTable quotes;
  quotes.add_column("say \"hi\"", Eigen::VectorXd::Zero(1));
  CHECK(to_csv_string(quotes) == "\"say \"\"hi\"\"\"\n0\n");
}

TEST_CASE("write/read round trip is bitwise exact") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd tricky(8);
  tricky << 1.0 / 3.0, -0.0, 6.02214076e23, 5e-324, -1.7976931348623157e308, M_PI,
      unif(gen), unif(gen);
  Eigen::VectorXd plain(8);
  for (long i = 0; i < 8; ++i) plain(i) = unif(gen) * std::pow(10.0, i - 4);

  CsvTable table;
  table.add_column("tricky [x]", tricky);
  table.add_column("plain [y]", plain);

  const std::string path = temp_path("gplfm_roundtrip.csv");
  write_csv(path, table);
  const CsvTable back = read_csv(path);
  std::remove(path.c_str());

  REQUIRE(back.headers == table.headers);
  REQUIRE(back.rows() == 8);
  for (long i = 0; i < 8; ++i) {
    // Bitwise equality, including the sign of zero.
    CHECK(std::signbit(back.columns[0](i)) == std::signbit(tricky(i)));
    CHECK(back.columns[0](i) == tricky(i));
    CHECK(back.columns[1](i) == plain(i));
  }

  // A second serialization of the parsed table reproduces the same bytes.
  CHECK(to_csv_string(back) == to_csv_string(table));
}

TEST_CASE("reader accepts CRLF, quoted headers, and blank trailing lines") {
  const std::string text =
      "\"time [s]\",value\r\n"
      "0,1.25\r\n"
      "0.5,-3e-2\r\n"
      "\r\n";
  const CsvTable table = parse_csv_string(text);
  REQUIRE(table.headers == std::vector<std::string>{"time [s]", "value"});
  REQUIRE(table.rows() == 2);
  CHECK(table.column("value")(1) == -3e-2);
}

TEST_CASE("reader reports precise failure locations") {
  SUBCASE("ragged row") {
    CHECK_THROWS_WITH_AS(parse_csv_string("a,b\n1,2\n3\n", "f.csv"),
                         "f.csv:3: expected 2 fields, found 1", CsvError);
  }
  SUBCASE("non-numeric cell") {
    CHECK_THROWS_WITH_AS(parse_csv_string("a,b\n1,oops\n", "f.csv"),
                         "f.csv:2: column 2: cell 'oops' is not numeric", CsvError);
  }
  SUBCASE("unterminated quote") {
    CHECK_THROWS_AS(parse_csv_string("a,\"b\n1,2\n", "f.csv"), CsvError);
  }
  SUBCASE("missing file and missing column") {
    CHECK_THROWS_AS(read_csv("/nonexistent/nowhere.csv"), CsvError);
    CsvTable table;
    table.add_column("x", Eigen::VectorXd::Zero(1));
    CHECK_THROWS_AS(table.column("y"), CsvError);
    CHECK(table.has_column("x"));
    CHECK_FALSE(table.has_column("y"));
  }
  SUBCASE("length mismatch on add") {
    CsvTable table;
    table.add_column("x", Eigen::VectorXd::Zero(3));
    CHECK_THROWS_AS(table.add_column("y", Eigen::VectorXd::Zero(2)), CsvError);
  }
}
