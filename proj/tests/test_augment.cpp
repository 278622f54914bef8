#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "owdcl/augment.hpp"
#include "owdcl/error.hpp"
#include "owdcl/rng.hpp"

using namespace owdcl;

namespace {

template <typename F>
std::string thrown_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return error_code_name(e.code());
  }
  return "<no throw>";
}

Raster make_raster(std::size_t h, std::size_t w, std::vector<double> px) {
  Raster img;
  img.height = h;
  img.width = w;
  img.pixels = std::move(px);
  return img;
}

Raster random_raster(std::size_t h, std::size_t w, DeterministicRng& rng) {
  Raster img;
  img.height = h;
  img.width = w;
  img.pixels.resize(h * w);
  for (auto& p : img.pixels) p = rng.uniform();
  return img;
}

double pixel_sum(const Raster& img) {
  return std::accumulate(img.pixels.begin(), img.pixels.end(), 0.0);
}

}  // namespace

TEST_CASE("raster validation rejects malformed shapes") {
  CHECK(thrown_code([] { validate_raster(make_raster(0, 3, {})); }) == "SpecInvalid");
  CHECK(thrown_code([] { validate_raster(make_raster(3, 0, {})); }) == "SpecInvalid");
  CHECK(thrown_code([] {
    validate_raster(make_raster(2, 2, {0.1, 0.2, 0.3}));
  }) == "SpecInvalid");
  CHECK_NOTHROW(validate_raster(make_raster(1, 1, {0.5})));
}

TEST_CASE("hflip reverses each row and is an involution") {
  Raster row = make_raster(1, 3, {0.1, 0.5, 0.9});
  Raster flipped = hflip(row);
  CHECK(flipped.pixels == std::vector<double>{0.9, 0.5, 0.1});

  Raster rect = make_raster(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(hflip(rect).pixels == std::vector<double>{3, 2, 1, 6, 5, 4});

  DeterministicRng rng(3);
  Raster img = random_raster(5, 7, rng);
  CHECK(hflip(hflip(img)).pixels == img.pixels);
}

TEST_CASE("zero-degree rotation is the identity") {
  DeterministicRng rng(9);
  Raster img = random_raster(6, 6, rng);
  Raster out = rotate(img, 0.0);
  CHECK(out.height == img.height);
  CHECK(out.width == img.width);
  CHECK(out.pixels == img.pixels);
}

TEST_CASE("ninety-degree rotation matches the index-permutation oracle") {
  // For a square n x n image the inverse map at 90 degrees sends destination
  // (r, c) to source (n-1-c, r); bilinear weights collapse to a single tap up
  // to ~1e-16 from cos(pi/2) not being exactly zero.
  DeterministicRng rng(21);
  for (std::size_t n : {3, 5, 8}) {
    Raster img = random_raster(n, n, rng);
    Raster out = rotate(img, 90.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        CHECK(out.at(r, c) == doctest::Approx(img.at(n - 1 - c, r)).epsilon(1e-9));
  }
}

TEST_CASE("rotation keeps the center pixel of odd-sized images") {
  Raster img = make_raster(5, 5, std::vector<double>(25, 0.2));
  img.at(2, 2) = 0.85;
  for (double deg : {10.0, 30.0, 45.0, 77.0}) {
    Raster out = rotate(img, deg);
    CHECK(out.at(2, 2) == doctest::Approx(0.85).epsilon(1e-12));
  }
}

TEST_CASE("rotation output is bounded by the input range") {
  // Bilinear taps form a sub-convex combination (zero fill drops weight), so
  // no output pixel can exceed the input maximum, and total mass only leaks.
  DeterministicRng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    Raster img = random_raster(9, 9, rng);
    double in_max = *std::max_element(img.pixels.begin(), img.pixels.end());
    double deg = rng.uniform(0.0, 90.0);
    Raster out = rotate(img, deg);
    for (double p : out.pixels) {
      CHECK(p >= 0.0);
      CHECK(p <= in_max + 1e-12);
    }
    CHECK(pixel_sum(out) <= pixel_sum(img) + 1e-9);
  }
}

TEST_CASE("rotation rejects angles outside the supported range") {
  Raster img = make_raster(2, 2, {0.1, 0.2, 0.3, 0.4});
  CHECK(thrown_code([&] { rotate(img, -0.001); }) == "AngleOutOfRange");
  CHECK(thrown_code([&] { rotate(img, 90.001); }) == "AngleOutOfRange");
  CHECK(thrown_code([&] {
    rotate(img, std::numeric_limits<double>::quiet_NaN());
  }) == "AngleOutOfRange");
  CHECK_NOTHROW(rotate(img, 0.0));
  CHECK_NOTHROW(rotate(img, 90.0));
}

TEST_CASE("augmented pair keeps the original and flips-then-rotates the copy") {
  DeterministicRng rng(1234);
  Raster img = random_raster(8, 8, rng);

  DeterministicRng pair_rng(42);
  auto [a, b] = make_pair(img, pair_rng);
  CHECK(a.pixels == img.pixels);

  // Replicate the draw with a clone of the rng: exactly one uniform is taken
  // and it is the rotation angle applied to the flipped image.
  DeterministicRng clone(42);
  double angle = clone.uniform(0.0, 30.0);
  CHECK(angle >= 0.0);
  CHECK(angle < 30.0);
  Raster expect = rotate(hflip(img), angle);
  CHECK(b.pixels == expect.pixels);

  // Same seed, same pair; different seed, different augmentation.
  DeterministicRng again(42);
  auto [a2, b2] = make_pair(img, again);
  CHECK(b2.pixels == b.pixels);
  DeterministicRng other(43);
  auto [a3, b3] = make_pair(img, other);
  CHECK(b3.pixels != b.pixels);
}

TEST_CASE("pair rotation angles are uniform on [0, 30)") {
  DeterministicRng rng(7);
  double acc = 0.0;
  double lo = 1e9;
  double hi = -1e9;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double a = rng.uniform(0.0, 30.0);
    acc += a;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  CHECK(acc / n == doctest::Approx(15.0).epsilon(0.02));
  CHECK(lo >= 0.0);
  CHECK(hi < 30.0);
  CHECK(lo < 1.0);   // the range is actually exercised
  CHECK(hi > 29.0);
}
