#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bnngp/datasets.hpp"
#include "bnngp/errors.hpp"

#include <cmath>
#include <cstdio>
#include <set>

using namespace bnngp;

namespace {

ErrorKind parse_kind(const std::string& text) {
  try {
    parse_csv(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidInput;
}

}  // namespace

TEST_CASE("rings geometry") {
  const Dataset d = generate_rings();
  REQUIRE(d.size() == 120);
  CHECK(d.X.cols() == 3);
  CHECK(d.Y.cols() == 1);
  CHECK((d.Y.col(0).array() == 0.0).count() == 60);
  CHECK((d.Y.col(0).array() == 1.0).count() == 60);
  std::set<std::pair<long, long>> seen;
  for (int r = 0; r < 60; ++r) {
    const double x = d.X(r, 0), y = d.X(r, 1), z = d.X(r, 2);
    CHECK(x * x + y * y == doctest::Approx(1.0));
    CHECK(z >= -0.5);
    CHECK(z <= 0.5);
    // second ring is the first turned and shifted
    CHECK(d.X(60 + r, 0) == z);
    CHECK(d.X(60 + r, 1) == doctest::Approx(y + 1.0));
    CHECK(d.X(60 + r, 2) == -x);
    seen.insert({std::lround(std::atan2(y, x) * 1e6), std::lround(z * 1e6)});
  }
  CHECK(seen.size() == 60);
  CHECK(d.X(0, 0) == 1.0);
  CHECK(d.X(0, 2) == -0.5);
  CHECK(d.X(4, 2) == 0.5);
}

TEST_CASE("standardize round trip") {
  const Dataset raw = generate_rings();
  const Dataset s = standardize(raw);
  for (int c = 0; c < 3; ++c) {
    CHECK(s.X.col(c).mean() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.X.col(c).squaredNorm() / 120 == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(s.y_mean(0) == doctest::Approx(0.5));
  CHECK(s.y_std(0) == doctest::Approx(0.5));
  const Dataset back = unstandardize(standardize(s));
  CHECK((back.X - raw.X).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.Y - raw.Y).cwiseAbs().maxCoeff() < 1e-12);
  Matrix X = Matrix::Ones(3, 1), Y(3, 1);
  Y << 1, 2, 3;
  const Dataset flat = standardize(Dataset(X, Y));
  CHECK(flat.X.cwiseAbs().maxCoeff() == 0.0);
  CHECK(flat.x_std(0) == 1.0);
}

TEST_CASE("every kth subset") {
  const Dataset s = every_kth_subset(standardize(generate_rings()), 10);
  REQUIRE(s.size() == 10);
  CHECK((s.Y.col(0).array() < 0).count() == 5);
  CHECK_THROWS_AS(every_kth_subset(s, 11), Error);
}

TEST_CASE("csv round trip") {
  const Dataset d = standardize(generate_rings());
  const Dataset back = parse_csv(to_csv(d));
  CHECK(back.X == d.X);
  CHECK(back.Y == d.Y);
  const std::string path = "bnngp_test_rings.csv";
  save_csv(path, d);
  CHECK(load_csv(path).X == d.X);
  std::remove(path.c_str());
  const Dataset c = parse_csv("# comment\nx_a, y_0 ,x_b\n1,2,3\n\n+4,5e-1,-6\n");
  CHECK(c.X(1, 0) == 4.0);
  CHECK(c.X(1, 1) == -6.0);
  CHECK(c.Y(1, 0) == 0.5);
}

TEST_CASE("csv errors") {
  CHECK(parse_kind("x_0,z\n1,2\n") == ErrorKind::Parse);
  CHECK(parse_kind("x_0,y_0\n1,abc\n") == ErrorKind::Parse);
  CHECK(parse_kind("x_0,y_0\n1,2,3\n") == ErrorKind::Parse);
  CHECK(parse_kind("x_0,y_0\n1,nan\n") == ErrorKind::Parse);
  CHECK(parse_kind("x_0,y_0\n") == ErrorKind::Parse);
  CHECK(parse_kind("x_0\n1\n") == ErrorKind::Parse);
  try {
    parse_csv("x_0,y_0\n1,2\n3,oops\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  try {
    load_csv("/nonexistent/data.csv");
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("csv table") {
  CsvTable t({"a", "b"});
  t.add_config("seed", "3");
  t.add_row({"1", "2"});
  CHECK(t.str() == "# seed = 3\na,b\n1,2\n");
  CHECK_THROWS_AS(t.add_row({"1"}), Error);
  CHECK(format_double(0.1) == "0.10000000000000001");
}
