#include "slm/app/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "slm/errors.hpp"

namespace slm::app {

namespace {

// Next header token, skipping whitespace and comments.
long header_value(std::istream& in, const std::string& path) {
  std::string tok;
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> tok;
  long v = 0;
  try {
    std::size_t used = 0;
    v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
  } catch (const std::exception&) {
    throw FormatError("bad PGM header in " + path);
  }
  return v;
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image", path);
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") throw FormatError("not a PGM file (P2/P5): " + path);
  const long width = header_value(in, path);
  const long height = header_value(in, path);
  const long maxval = header_value(in, path);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) throw FormatError("bad PGM header in " + path);

  GrayImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(width * height);
  if (magic == "P2") {
    for (Index i = 0; i < img.pixels.size(); ++i) {
      long v = -1;
      if (!(in >> v) || v < 0 || v > maxval) throw FormatError("bad PGM pixel data in " + path);
      img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return img;
  }
  in.get();  // single whitespace after maxval
  const int bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(static_cast<std::size_t>(img.pixels.size() * bytes));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw FormatError("truncated PGM file " + path);
  for (Index i = 0; i < img.pixels.size(); ++i) {
    const std::size_t k = static_cast<std::size_t>(i * bytes);
    const long v = bytes == 1 ? raw[k] : (static_cast<long>(raw[k]) << 8) | raw[k + 1];
    img.pixels[i] = static_cast<double>(std::min(v, maxval)) / static_cast<double>(maxval);
  }
  return img;
}

void write_pgm(const std::string& path, const GrayImage& image, bool binary) {
  if (image.pixels.size() != image.height * image.width) throw ShapeError("write_pgm: pixel count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image", path);
  out << (binary ? "P5" : "P2") << "\n" << image.width << " " << image.height << "\n255\n";
  for (Index i = 0; i < image.pixels.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    const int level = static_cast<int>(std::lround(255.0 * v));
    if (binary) {
      out.put(static_cast<char>(level));
    } else {
      out << level << ((i + 1) % image.width == 0 ? '\n' : ' ');
    }
  }
  if (!out) throw IoError("write failed", path);
}

}  // namespace slm::app
