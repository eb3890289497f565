#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "epnozzle/error.hpp"
#include "epnozzle/io.hpp"
#include "fixtures.hpp"

using namespace epn;

TEST_CASE("SHA-256 of a known vector") {
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("doubles format round-trippably") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0})
    CHECK(std::stod(io::format_double(v)) == v);
}

TEST_CASE("atomic write and read round trip") {
  const auto dir = epn::test::scratch_dir("io_atomic");
  io::write_file_atomic(dir / "a.txt", "hello\n");
  io::write_file_atomic(dir / "a.txt", "replaced\n");
  CHECK(io::read_file(dir / "a.txt") == "replaced\n");
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  try {
    io::write_file_atomic(dir / "a.txt" / "child", "x");
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io_error);
  }
  CHECK_THROWS_AS(io::read_file(dir / "missing"), Error);
}

TEST_CASE("field CSV round trip is bit exact") {
  const auto dir = epn::test::scratch_dir("io_csv");
  const Grid2D g(9, 8, 1.5);
  const ScalarField f = ScalarField::from_function(g, [](double a, double b) { return std::exp(a) / (1.0 + b) / 3.0; });
  io::write_field_csv(f, dir / "f.csv");
  CHECK(io::read_file(dir / "f.csv").rfind("x1,x2,value\n", 0) == 0);
  const ScalarField back = io::read_field_csv(g, dir / "f.csv");
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(back[k] == f[k]);
  CHECK_THROWS_AS(io::read_field_csv(Grid2D(8, 8, 1.5), dir / "f.csv"), Error);
}

TEST_CASE("PGM heatmap and SVG chart are well formed") {
  const auto dir = epn::test::scratch_dir("io_pgm");
  const Grid2D g(8, 8, 1.0);
  io::write_field_pgm(ScalarField::from_function(g, [](double a, double b) { return a + b; }), dir / "f.pgm");
  const std::string pgm = io::read_file(dir / "f.pgm");
  CHECK(pgm.rfind("P2", 0) == 0);
  CHECK(std::filesystem::exists(dir / "f.pgm.txt"));
  const std::string svg = io::svg_line_chart("t", {0.0, 0.5, 1.0}, {{"a", {1.0, 2.0, 3.0}}, {"b", {0.0, 0.0, 0.0}}});
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}
