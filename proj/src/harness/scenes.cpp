#include "micclass/harness/scenes.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "micclass/rng.hpp"

namespace micclass {

Matrix make_scene(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  const double H = static_cast<double>(height), W = static_cast<double>(width);
  Matrix img(height, width);

  auto ramp = [&](double base) {
    // value = base + gy*y + gx*x, normalized coordinates
    return std::array<double, 3>{base, rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25)};
  };
  const auto bg = ramp(rng.uniform(0.3, 0.7));
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) img(y, x) = bg[0] + bg[1] * (y / H - 0.5) + bg[2] * (x / W - 0.5);

  const int shapes = 4 + static_cast<int>(rng.below(6));
  for (int s = 0; s < shapes; ++s) {
    const bool ellipse = rng.uniform() < 0.5;
    const double cy = rng.uniform(0, H), cx = rng.uniform(0, W);
    const double ry = rng.uniform(0.08, 0.35) * H, rx = rng.uniform(0.08, 0.35) * W;
    const double th = rng.uniform(0, 3.14159265358979);
    const double c = std::cos(th), sn = std::sin(th);
    const auto r = ramp(rng.uniform(0.05, 0.95));
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const double dy = y - cy, dx = x - cx;
        const double u = (c * dx + sn * dy) / rx, v = (-sn * dx + c * dy) / ry;
        const bool inside = ellipse ? u * u + v * v <= 1.0 : std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
        if (inside) img(y, x) = r[0] + r[1] * v + r[2] * u;
      }
  }

  // low-amplitude sinusoidal texture
  const double fy = rng.uniform(0.05, 0.4), fx = rng.uniform(0.05, 0.4), ph = rng.uniform(0, 6.28);
  const double amp = rng.uniform(0.0, 0.03);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      img(y, x) = std::clamp(img(y, x) + amp * std::sin(fy * y + fx * x + ph), 0.0, 1.0);
  return img;
}

std::vector<Matrix> make_scenes(std::size_t count, std::size_t height, std::size_t width, std::uint64_t seed) {
  std::vector<Matrix> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(make_scene(height, width, derive_seed(seed, i)));
  return out;
}

Matrix add_gaussian_noise(const Matrix& img, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  Matrix out = img;
  for (double& v : out.data()) v += sigma * rng.gaussian();
  return out;
}

}  // namespace micclass
