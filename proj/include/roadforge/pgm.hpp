#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "roadforge/error.hpp"

namespace roadforge {

/// 8-bit grey image, row-major, row 0 first in the file.
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  std::uint8_t& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  friend bool operator==(const Image8&, const Image8&) = default;
};

enum class PgmFormat { Ascii, Binary };

namespace detail {

inline std::string pgm_token(std::istream& in, const std::string& where,
                             std::vector<std::string>* comments = nullptr) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string text;
      std::getline(in, text);
      const auto first = text.find_first_not_of(' ');
      if (comments) comments->push_back(first == std::string::npos ? std::string() : text.substr(first));
      if (!tok.empty()) return tok;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(ch);
  }
  if (tok.empty()) fail(ErrorKind::Parse, where + ": truncated PGM header");
  return tok;
}

inline std::size_t pgm_number(std::istream& in, const std::string& where,
                              std::vector<std::string>* comments = nullptr) {
  const std::string tok = pgm_token(in, where, comments);
  std::size_t v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9') fail(ErrorKind::Parse, where + ": bad PGM header value '" + tok + "'");
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

}  // namespace detail

/// Writes P2 or P5. `comment` lines are emitted after the magic number.
inline void write_pgm(std::ostream& out, const Image8& img, PgmFormat format,
                      const std::vector<std::string>& comments = {}) {
  out << (format == PgmFormat::Binary ? "P5" : "P2") << '\n';
  for (const std::string& c : comments) out << "# " << c << '\n';
  out << img.width << ' ' << img.height << '\n' << 255 << '\n';
  if (format == PgmFormat::Binary) {
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    return;
  }
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      out << static_cast<int>(img.at(r, c)) << (c + 1 == img.width ? '\n' : ' ');
    }
  }
}

/// Reads P2 or P5. Header comment lines (without '#') go to `comments`.
inline Image8 read_pgm(std::istream& in, const std::string& where = "pgm",
                       std::vector<std::string>* comments = nullptr) {
  const std::string magic = detail::pgm_token(in, where, comments);
  if (magic != "P2" && magic != "P5") fail(ErrorKind::Parse, where + ": not a P2/P5 PGM");
  Image8 img;
  img.width = detail::pgm_number(in, where, comments);
  img.height = detail::pgm_number(in, where, comments);
  const std::size_t maxval = detail::pgm_number(in, where, comments);
  if (img.width == 0 || img.height == 0) fail(ErrorKind::Parse, where + ": empty PGM");
  if (maxval == 0 || maxval > 255) fail(ErrorKind::Parse, where + ": only 8-bit PGM is supported");
  img.pixels.resize(img.width * img.height);
  if (magic == "P5") {
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
      fail(ErrorKind::Parse, where + ": truncated PGM raster");
  } else {
    for (auto& px : img.pixels) {
      const std::size_t v = detail::pgm_number(in, where);
      if (v > maxval) fail(ErrorKind::Parse, where + ": PGM value exceeds maxval");
      px = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>((px * 255 + maxval / 2) / maxval);
  }
  return img;
}

inline void save_pgm(const Image8& img, const std::string& path, PgmFormat format,
                     const std::vector<std::string>& comments = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  write_pgm(out, img, format, comments);
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

inline Image8 load_pgm(const std::string& path, std::vector<std::string>* comments = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  return read_pgm(in, path, comments);
}

}  // namespace roadforge
