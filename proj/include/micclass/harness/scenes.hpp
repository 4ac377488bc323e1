#pragma once

#include <cstdint>
#include <vector>

#include "micclass/matrix.hpp"

namespace micclass {

// Piecewise-smooth grey images in [0,1]: a shaded background with overlapping
// ellipses and rectangles, each carrying its own linear ramp, plus faint
// texture. A stand-in for a natural-image training set.
Matrix make_scene(std::size_t height, std::size_t width, std::uint64_t seed);
std::vector<Matrix> make_scenes(std::size_t count, std::size_t height, std::size_t width, std::uint64_t seed);

// Adds N(0, sigma^2) noise without clamping.
Matrix add_gaussian_noise(const Matrix& img, double sigma, std::uint64_t seed);

}  // namespace micclass
