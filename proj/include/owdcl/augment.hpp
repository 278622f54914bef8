#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "owdcl/rng.hpp"

namespace owdcl {

// Small grayscale image, row-major, pixel values in [0,1].
struct Raster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
};

// Throws SpecInvalid if the shape and pixel buffer disagree.
void validate_raster(const Raster& img);

Raster hflip(const Raster& img);

// Rotation about the image center ((h-1)/2, (w-1)/2), bilinear resampling,
// zero fill outside the source frame. Accepts degrees in [0, 90]; throws
// AngleOutOfRange otherwise.
Raster rotate(const Raster& img, double degrees);

// Positive pair for contrastive training: the original image plus a flipped
// copy rotated by an angle drawn uniformly from [0, 30] degrees.
std::pair<Raster, Raster> make_pair(const Raster& img, DeterministicRng& rng);

}  // namespace owdcl
