#include "owdcl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "owdcl/error.hpp"

namespace owdcl {

void validate_raster(const Raster& img) {
  if (img.height == 0 || img.width == 0)
    fail(ErrorCode::SpecInvalid, "raster has zero extent");
  if (img.pixels.size() != img.height * img.width)
    fail(ErrorCode::SpecInvalid, "raster pixel buffer is " + std::to_string(img.pixels.size()) +
                                     " values, expected " +
                                     std::to_string(img.height * img.width));
}

Raster hflip(const Raster& img) {
  validate_raster(img);
  Raster out = img;
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c)
      out.at(r, c) = img.at(r, img.width - 1 - c);
  return out;
}

Raster rotate(const Raster& img, double degrees) {
  validate_raster(img);
  if (!(degrees >= 0.0 && degrees <= 90.0))
    fail(ErrorCode::AngleOutOfRange,
         "rotation angle " + std::to_string(degrees) + " outside [0, 90] degrees");

  const double theta = degrees * (3.14159265358979323846 / 180.0);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const double cy = (static_cast<double>(img.height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(img.width) - 1.0) / 2.0;

  Raster out;
  out.height = img.height;
  out.width = img.width;
  out.pixels.assign(img.pixels.size(), 0.0);

  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      // Inverse map the destination pixel back into the source frame.
      const double dy = static_cast<double>(r) - cy;
      const double dx = static_cast<double>(c) - cx;
      const double sx = ct * dx + st * dy + cx;
      const double sy = -st * dx + ct * dy + cy;

      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double wx = sx - fx0;
      const double wy = sy - fy0;
      const long x0 = static_cast<long>(fx0);
      const long y0 = static_cast<long>(fy0);

      double acc = 0.0;
      auto tap = [&](long yy, long xx, double w) {
        if (w == 0.0) return;
        if (yy < 0 || xx < 0 || yy >= static_cast<long>(img.height) ||
            xx >= static_cast<long>(img.width))
          return;  // zero fill
        acc += w * img.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
      };
      tap(y0, x0, (1.0 - wy) * (1.0 - wx));
      tap(y0, x0 + 1, (1.0 - wy) * wx);
      tap(y0 + 1, x0, wy * (1.0 - wx));
      tap(y0 + 1, x0 + 1, wy * wx);

      out.at(r, c) = std::clamp(acc, 0.0, 1.0);
    }
  }
  return out;
}

std::pair<Raster, Raster> make_pair(const Raster& img, DeterministicRng& rng) {
  const double angle = rng.uniform(0.0, 30.0);
  return {img, rotate(hflip(img), angle)};
}

}  // namespace owdcl
