#include "core/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace obdet {

namespace {

// next whitespace-separated token, skipping '#' comment lines
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  for (;;) {
    int ch = in.get();
    if (ch == EOF) throw_format_error("unexpected end of header in " + path);
    if (std::isspace(ch)) continue;
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    tok.push_back(static_cast<char>(ch));
    while (in.peek() != EOF && !std::isspace(in.peek())) tok.push_back(static_cast<char>(in.get()));
    return tok;
  }
}

int parse_int(const std::string& tok, const std::string& path) {
  try {
    return std::stoi(tok);
  } catch (...) {
    throw_format_error("bad integer '" + tok + "' in " + path);
  }
}

struct PnmHeader {
  std::string magic;
  int width = 0, height = 0, maxval = 0;
};

PnmHeader read_pgm_header(std::istream& in, const std::string& path) {
  PnmHeader h;
  h.magic = next_token(in, path);
  if (h.magic != "P5") throw_format_error("not a binary PGM (P5): " + path);
  h.width = parse_int(next_token(in, path), path);
  h.height = parse_int(next_token(in, path), path);
  h.maxval = parse_int(next_token(in, path), path);
  if (h.width <= 0 || h.height <= 0) throw_format_error("bad PGM dimensions in " + path);
  in.get();  // single whitespace after maxval
  return h;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io_error("cannot open file: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io_error("cannot write file: " + path);
  return out;
}

}  // namespace

ImageGray read_pgm8(const std::string& path) {
  auto in = open_in(path);
  const PnmHeader h = read_pgm_header(in, path);
  if (h.maxval != 255) throw_format_error("expected 8-bit PGM (maxval 255): " + path);
  ImageGray img(h.width, h.height);
  in.read(reinterpret_cast<char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.size()))
    throw_format_error("truncated PGM pixel data: " + path);
  return img;
}

void write_pgm8(const ImageGray& img, const std::string& path) {
  require(!img.empty(), "cannot write empty image");
  auto out = open_out(path);
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (!out) throw_io_error("write failed: " + path);
}

namespace {

struct PfmHeader {
  int width = 0, height = 0;
  double scale = 0.0;
};

PfmHeader read_pfm_header(std::istream& in, const std::string& path) {
  PfmHeader h;
  const std::string magic = next_token(in, path);
  if (magic != "Pf") throw_format_error("not a single-channel PFM (Pf): " + path);
  h.width = parse_int(next_token(in, path), path);
  h.height = parse_int(next_token(in, path), path);
  try {
    h.scale = std::stod(next_token(in, path));
  } catch (...) {
    throw_format_error("bad PFM scale in " + path);
  }
  if (h.width <= 0 || h.height <= 0) throw_format_error("bad PFM dimensions in " + path);
  if (h.scale >= 0.0) throw_format_error("big-endian PFM not supported: " + path);
  in.get();
  return h;
}

Image<float> read_pfm_plane(const std::string& path) {
  auto in = open_in(path);
  const PfmHeader h = read_pfm_header(in, path);
  Image<float> plane(h.width, h.height);
  // PFM stores rows bottom-to-top
  for (int y = h.height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(plane.row(y)), static_cast<std::streamsize>(h.width) * 4);
    if (in.gcount() != static_cast<std::streamsize>(h.width) * 4)
      throw_format_error("truncated PFM pixel data: " + path);
  }
  return plane;
}

void write_pfm_plane(const Image<float>& plane, const std::string& path) {
  require(!plane.empty(), "cannot write empty map");
  auto out = open_out(path);
  out << "Pf\n" << plane.width() << " " << plane.height() << "\n-1.0\n";
  for (int y = plane.height() - 1; y >= 0; --y)
    out.write(reinterpret_cast<const char*>(plane.row(y)),
              static_cast<std::streamsize>(plane.width()) * 4);
  if (!out) throw_io_error("write failed: " + path);
}

}  // namespace

DepthMap read_depth_pfm(const std::string& path) {
  DepthMap depth;
  depth.px = read_pfm_plane(path);
  float far_clip = 0.0f;
  for (int y = 0; y < depth.height(); ++y) {
    const float* row = depth.px.row(y);
    for (int x = 0; x < depth.width(); ++x) {
      if (!(row[x] >= 0.0f)) throw_format_error("negative/NaN depth value in " + path);
      far_clip = std::max(far_clip, row[x]);
    }
  }
  depth.far_clip_m = far_clip;
  return depth;
}

void write_depth_pfm(const DepthMap& depth, const std::string& path) {
  write_pfm_plane(depth.px, path);
}

DepthMap read_depth_pgm16(const std::string& path) {
  auto in = open_in(path);
  const PnmHeader h = read_pgm_header(in, path);
  if (h.maxval != 65535) throw_format_error("expected 16-bit PGM (maxval 65535): " + path);
  DepthMap depth(h.width, h.height, 0.0);
  std::vector<unsigned char> row(static_cast<std::size_t>(h.width) * 2);
  float far_clip = 0.0f;
  for (int y = 0; y < h.height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (in.gcount() != static_cast<std::streamsize>(row.size()))
      throw_format_error("truncated PGM pixel data: " + path);
    for (int x = 0; x < h.width; ++x) {
      // PGM 16-bit samples are big-endian; values are millimeters
      const unsigned mm = (static_cast<unsigned>(row[2 * x]) << 8) | row[2 * x + 1];
      const float m = static_cast<float>(mm) / 1000.0f;
      depth.px.at(x, y) = m;
      far_clip = std::max(far_clip, m);
    }
  }
  depth.far_clip_m = far_clip;
  return depth;
}

void write_depth_pgm16(const DepthMap& depth, const std::string& path) {
  require(!depth.px.empty(), "cannot write empty map");
  auto out = open_out(path);
  out << "P5\n" << depth.width() << " " << depth.height() << "\n65535\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(depth.width()) * 2);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const float m = depth.px.at(x, y);
      unsigned mm = 0;
      if (m > 0.0f) mm = std::min(65535u, static_cast<unsigned>(std::lround(m * 1000.0)));
      row[2 * x] = static_cast<unsigned char>(mm >> 8);
      row[2 * x + 1] = static_cast<unsigned char>(mm & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw_io_error("write failed: " + path);
}

DepthMap read_depth(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".pfm") return read_depth_pfm(path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".pgm") return read_depth_pgm16(path);
  throw_format_error("unknown depth file extension (want .pfm or .pgm): " + path);
}

DisparityMap read_disparity_pfm(const std::string& path) {
  DisparityMap disp;
  disp.px = read_pfm_plane(path);
  for (int y = 0; y < disp.height(); ++y) {
    const float* row = disp.px.row(y);
    for (int x = 0; x < disp.width(); ++x)
      if (!(row[x] >= 0.0f) && row[x] != DisparityMap::kInvalid)
        throw_format_error("disparity value neither valid nor -1 in " + path);
  }
  return disp;
}

void write_disparity_pfm(const DisparityMap& disp, const std::string& path) {
  write_pfm_plane(disp.px, path);
}

}  // namespace obdet
