#include "slm/app/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "slm/errors.hpp"

namespace slm::app {

namespace {

struct Ellipse {
  double value;
  double a;
  double b;
  double x0;
  double y0;
  double angle;
};

// Additive intensities on [-1, 1]^2, after the classic head phantom with higher contrast.
constexpr Ellipse kHead[] = {
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},        {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},       {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},     {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},   {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
};

void normalize(Vector& u) {
  const double lo = u.minCoeff();
  const double hi = u.maxCoeff();
  if (hi > lo) {
    u = (u.array() - lo) / (hi - lo);
  } else {
    u.setZero();
  }
}

}  // namespace

Vector make_phantom(Index side, std::uint64_t seed) {
  if (side < 2) throw DomainError("phantom: side must be at least 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  std::vector<Ellipse> shapes(std::begin(kHead), std::end(kHead));
  for (std::size_t i = 2; i < shapes.size(); ++i) {
    shapes[i].x0 += jitter(rng);
    shapes[i].y0 += jitter(rng);
  }
  Vector u = Vector::Zero(side * side);
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      const double x = (2.0 * static_cast<double>(c) + 1.0) / static_cast<double>(side) - 1.0;
      const double y = 1.0 - (2.0 * static_cast<double>(r) + 1.0) / static_cast<double>(side);
      double v = 0.0;
      for (const Ellipse& e : shapes) {
        const double t = e.angle * std::numbers::pi / 180.0;
        const double dx = x - e.x0;
        const double dy = y - e.y0;
        const double xr = dx * std::cos(t) + dy * std::sin(t);
        const double yr = -dx * std::sin(t) + dy * std::cos(t);
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) v += e.value;
      }
      u[r * side + c] = v;
    }
  }
  normalize(u);
  return u;
}

Vector make_smooth_edges(Index side, std::uint64_t seed) {
  if (side < 2) throw DomainError("smooth_edges: side must be at least 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double s = static_cast<double>(side);
  Vector u = Vector::Zero(side * side);
  // Low-frequency cosine field.
  for (int kx = 0; kx < 4; ++kx) {
    for (int ky = 0; ky < 4; ++ky) {
      const double amp = normal(rng) / (1.0 + kx * kx + ky * ky);
      const double phx = 2.0 * std::numbers::pi * unit(rng);
      const double phy = 2.0 * std::numbers::pi * unit(rng);
      for (Index r = 0; r < side; ++r) {
        for (Index c = 0; c < side; ++c) {
          u[r * side + c] += amp * std::cos(std::numbers::pi * kx * c / s + phx) *
                             std::cos(std::numbers::pi * ky * r / s + phy);
        }
      }
    }
  }
  // Steps across random lines and thin bright ridges.
  for (int k = 0; k < 3; ++k) {
    const double angle = std::numbers::pi * unit(rng);
    const double offset = (unit(rng) - 0.5) * s * 0.6;
    const double step = 1.5 * (unit(rng) + 0.5);
    const bool ridge = k == 2;
    for (Index r = 0; r < side; ++r) {
      for (Index c = 0; c < side; ++c) {
        const double d = (c - 0.5 * s) * std::cos(angle) + (r - 0.5 * s) * std::sin(angle) - offset;
        if (ridge) {
          if (std::abs(d) < 0.75) u[r * side + c] += step;
        } else if (d > 0.0) {
          u[r * side + c] += step;
        }
      }
    }
  }
  normalize(u);
  return u;
}

Vector make_synthetic(const std::string& generator, Index side, std::uint64_t seed) {
  if (generator == "phantom") return make_phantom(side, seed);
  if (generator == "smooth_edges" || generator == "smooth+edges") return make_smooth_edges(side, seed);
  throw FormatError("unknown synthetic generator '" + generator + "'");
}

}  // namespace slm::app
