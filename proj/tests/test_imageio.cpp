#include <cmath>
#include <random>
#include <string>

#include "doctest.h"

#include "ddpseg/imageio.hpp"
#include "test_support.hpp"

using namespace ddpseg;

namespace {

std::string pgm16(int w, int h, unsigned value) {
  std::string s = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n65535\n";
  for (int k = 0; k < w * h; ++k) {
    s += static_cast<char>(value >> 8);
    s += static_cast<char>(value & 0xff);
  }
  return s;
}

Grid2<double> from_fn(int X, int Z, auto f) {
  Grid2<double> g(X, Z);
  for (int x = 0; x < X; ++x)
    for (int z = 0; z < Z; ++z) g(x, z) = f(x, z);
  return g;
}

}  // namespace

TEST_CASE("csv image parses rows as z and columns as x") {
  const BScan img = parse_bscan("0,0.5\n1,0.25\n", ImageFormat::Csv);
  CHECK(img.width() == 2);
  CHECK(img.height() == 2);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(1, 0) == 0.5);
  CHECK(img(0, 1) == 1.0);
  CHECK(img(1, 1) == 0.25);
}

TEST_CASE("csv image errors name the offending position") {
  try {
    parse_bscan("0,0.5\nabc,0.25\n", ImageFormat::Csv);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("row 1, column 0") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_bscan("0,0.5\n1\n", ImageFormat::Csv), ParseError);
  CHECK_THROWS_AS(parse_bscan("0,1.5\n1,0\n", ImageFormat::Csv), ParseError);
  CHECK_THROWS_AS(parse_bscan("0.5\n", ImageFormat::Csv), ValidationError);
}

TEST_CASE("16-bit pgm at maxval normalizes to one") {
  const BScan img = parse_bscan(pgm16(3, 4, 65535), ImageFormat::Pgm16);
  CHECK(img.width() == 3);
  CHECK(img.height() == 4);
  for (double v : img.pixels().values()) CHECK(v == 1.0);
}

TEST_CASE("pgm samples are big-endian") {
  const BScan img = parse_bscan(pgm16(2, 2, 0x0100), ImageFormat::Pgm16);
  CHECK(img(1, 1) == doctest::Approx(256.0 / 65535.0).epsilon(1e-15));
}

TEST_CASE("pgm header errors") {
  CHECK_THROWS_AS(parse_bscan("P2\n2 2\n255\n....", ImageFormat::Pgm16), ParseError);
  CHECK_THROWS_AS(parse_bscan("P5\n2 x\n255\n....", ImageFormat::Pgm16), ParseError);
  CHECK_THROWS_AS(parse_bscan("P5\n2 2\n65535\n\x01\x02", ImageFormat::Pgm16), ParseError);
}

TEST_CASE("pgm round trip is within half a quantization step") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const BScan img(from_fn(7, 5, [&](int, int) { return u(rng); }));
  const BScan back = parse_bscan(serialize_bscan(img, ImageFormat::Pgm16), ImageFormat::Pgm16);
  for (int x = 0; x < 7; ++x)
    for (int z = 0; z < 5; ++z) CHECK(std::abs(back(x, z) - img(x, z)) <= 0.5 / 65535.0 + 1e-15);
}

TEST_CASE("csv image round trip is exact") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const BScan img(from_fn(4, 3, [&](int, int) { return u(rng); }));
  CHECK(parse_bscan(serialize_bscan(img, ImageFormat::Csv), ImageFormat::Csv).pixels() == img.pixels());
}

TEST_CASE("gradient channels of a constant image vanish") {
  const auto st = gradient_channels(from_fn(5, 6, [](int, int) { return 0.3; }));
  for (auto c : {Channel::Grad0, Channel::Grad45, Channel::Grad90, Channel::Grad135, Channel::Dir0_90,
                 Channel::Dir45_135, Channel::Magnitude})
    for (double v : st[c].values()) CHECK(v == 0.0);
  CHECK(st[Channel::Raw](2, 3) == 0.3);
}

TEST_CASE("gradient channels of a z ramp") {
  const int X = 5, Z = 9;
  const auto st = gradient_channels(from_fn(X, Z, [&](int, int z) { return z / double(Z - 1); }));
  for (int x = 0; x < X; ++x)
    for (int z = 0; z < Z; ++z) {
      CHECK(st[Channel::Grad0](x, z) == 0.0);
      CHECK(st[Channel::Grad90](x, z) == doctest::Approx(1.0 / (Z - 1)).epsilon(1e-12));
      CHECK(st[Channel::Dir0_90](x, z) == doctest::Approx(0.5));
      CHECK(st[Channel::Magnitude](x, z) == doctest::Approx(1.0));
    }
  // Interior diagonal derivatives are the projection of the slope.
  CHECK(st[Channel::Grad45](2, 4) == doctest::Approx(1.0 / (Z - 1) / std::sqrt(2.0)));
  CHECK(st[Channel::Grad135](2, 4) == doctest::Approx(1.0 / (Z - 1) / std::sqrt(2.0)));
}

TEST_CASE("vertical step edge touches only the two adjacent columns in grad0") {
  const int X = 8, Z = 4, x0 = 4;
  const auto st = gradient_channels(from_fn(X, Z, [&](int x, int) { return x >= x0 ? 1.0 : 0.0; }));
  for (int x = 0; x < X; ++x)
    for (int z = 0; z < Z; ++z) {
      const bool adjacent = x == x0 - 1 || x == x0;
      CHECK((st[Channel::Grad0](x, z) != 0.0) == adjacent);
      CHECK(st[Channel::Grad90](x, z) == 0.0);
    }
}

TEST_CASE("direction and magnitude channels stay in range") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto st = gradient_channels(from_fn(9, 11, [&](int, int) { return u(rng); }));
  double max_mag = 0.0;
  for (double v : st[Channel::Dir0_90].values()) CHECK((v >= -1.0 && v <= 1.0));
  for (double v : st[Channel::Dir45_135].values()) CHECK((v >= -1.0 && v <= 1.0));
  for (double v : st[Channel::Magnitude].values()) {
    CHECK((v >= 0.0 && v <= 1.0));
    max_mag = std::max(max_mag, v);
  }
  CHECK(max_mag == 1.0);
  CHECK(st.width() == 9);
  CHECK(st.height() == 11);
}

TEST_CASE("property: gradient channels ignore an intensity offset") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> dim(2, 12);
    const int X = dim(rng), Z = dim(rng);
    // Dyadic values keep the shifted differences exact.
    std::uniform_int_distribution<int> q(0, 512);
    const auto base = from_fn(X, Z, [&](int, int) { return q(rng) / 1024.0; });
    auto shifted = base;
    for (double& v : shifted.values()) v += 0.25;
    const auto a = gradient_channels(base);
    const auto b = gradient_channels(shifted);
    for (auto c : {Channel::Grad0, Channel::Grad45, Channel::Grad90, Channel::Grad135, Channel::Dir0_90,
                   Channel::Dir45_135, Channel::Magnitude})
      CHECK(a[c] == b[c]);
  }
}

TEST_CASE("surface csv round trip is bit exact") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 63.0);
  SurfaceSet s(3, 17);
  for (int i = 0; i < 3; ++i)
    for (int x = 0; x < 17; ++x) s(i, x) = u(rng);
  CHECK(parse_surfaces(serialize_surfaces(s), 64) == s);

  SurfaceSet small(1, 2);
  small(0, 0) = 3.5;
  small(0, 1) = 4.0;
  const auto text = serialize_surfaces(small);
  CHECK(text == "surface,x,z\n0,0,3.5\n0,1,4\n");
  CHECK(parse_surfaces(text) == small);
}

TEST_CASE("surface csv file round trip") {
  const auto dir = testing::scratch_dir("imageio_surfaces");
  SurfaceSet s(2, 3);
  s(1, 2) = 1.0 / 3.0;
  write_surfaces(s, dir / "s.csv");
  CHECK(read_surfaces(dir / "s.csv") == s);
  CHECK_FALSE(std::filesystem::exists(dir / "s.csv.tmp"));
  CHECK_THROWS_AS(read_surfaces(dir / "missing.csv"), IoError);
}

TEST_CASE("surface csv errors") {
  try {
    parse_surfaces("surface,x,z\n0,0,1\n0,1,2\n0,1,3\n");
    FAIL("expected duplicate error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("duplicate record for surface 0, x 1") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_surfaces("surface,x,z\n0,0,-1\n"), ValidationError);
  CHECK_THROWS_AS(parse_surfaces("surface,x,z\n0,0,5\n", 5), ValidationError);
  CHECK_NOTHROW(parse_surfaces("surface,x,z\n0,0,4\n", 5));
  CHECK_THROWS_AS(parse_surfaces("surface,x,z\n0,0,1\n0,2,1\n"), ParseError);  // missing x=1
  CHECK_THROWS_AS(parse_surfaces("i,x,z\n0,0,1\n"), ParseError);
}
