#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "daema/csv.hpp"
#include "tmpdir.hpp"

using namespace daema;

TEST_CASE("parse with quotes, CRLF and BOM") {
  std::istringstream in("\xEF\xBB\xBF" "a,\"b,c\",d\r\n1,\"x \"\"y\"\"\",3\r\n4,5,6\n");
  const auto t = parse_csv(in, "mem");
  CHECK(t.header == std::vector<std::string>{"a", "b,c", "d"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x \"y\"");
  CHECK(t.rows[1][2] == "6");
  CHECK(t.column_index("d") == 2);
  CHECK(t.column_index("zz") == -1);
}

TEST_CASE("ragged rows are a parse error") {
  std::istringstream in("a,b\n1,2\n3\n");
  CHECK_THROWS_AS(parse_csv(in, "mem"), ParseError);
}

TEST_CASE("missing file is a parse error") {
  CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), ParseError);
}

TEST_CASE("NA token") {
  CHECK(is_na_token("NA"));
  CHECK(is_na_token("na"));
  CHECK(is_na_token(" Na "));
  CHECK_FALSE(is_na_token("NaN"));
  CHECK_FALSE(is_na_token(""));
}

TEST_CASE("strict number parsing") {
  double v = 0;
  CHECK(parse_double("1.5", v));
  CHECK(v == 1.5);
  CHECK(parse_double(" -2e3 ", v));
  CHECK(v == -2000);
  CHECK(parse_double("+4", v));
  CHECK(v == 4);
  CHECK_FALSE(parse_double("1.5x", v));
  CHECK_FALSE(parse_double("", v));
  CHECK_FALSE(parse_double("abc", v));
}

TEST_CASE("format_double round-trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 0.0, 1e21}) {
    double back = 0;
    REQUIRE(parse_double(format_double(x), back));
    CHECK(back == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("write then read") {
  TempDir dir;
  CsvTable t{{"x", "y,z"}, {{"1", "a\"b"}, {"NA", "2"}}};
  write_csv(dir / "t.csv", t);
  const auto back = read_csv(dir / "t.csv");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}
