#pragma once

#include <string>

#include "slm/linops.hpp"

namespace slm::app {

struct GrayImage {
  Index height = 0;
  Index width = 0;
  Vector pixels;  ///< row-major, scaled to [0, 1] by maxval
};

/// Reads P2 (ASCII) or P5 (binary, 8 or 16 bit). IoError / FormatError carry the path.
GrayImage read_pgm(const std::string& path);

/// Values are clamped to [0, 1] and written with maxval 255.
void write_pgm(const std::string& path, const GrayImage& image, bool binary = true);

}  // namespace slm::app
