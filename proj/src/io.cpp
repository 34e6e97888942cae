#include "speckle/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace speckle::io {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  return is;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

// Next whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

long parse_long(const std::string& s, const std::string& what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw IoError("bad " + what + " '" + s + "'");
  return v;
}

template <class T>
T parse_exact(std::string_view s, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw IoError(std::string("CFLD header: bad ") + what + " '" + std::string(s) + "'");
  return v;
}

void put_f64(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("CFLD payload is truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  auto is = open_in(path);
  if (pgm_token(is) != "P5") throw IoError("'" + path.string() + "' is not a binary PGM (P5)");
  const long w = parse_long(pgm_token(is), "PGM width");
  const long h = parse_long(pgm_token(is), "PGM height");
  const long maxval = parse_long(pgm_token(is), "PGM maxval");
  if (w <= 0 || h <= 0) throw IoError("PGM dimensions must be positive");
  if (maxval <= 0 || maxval > 65535) throw IoError("PGM maxval must lie in [1, 65535]");
  GrayImage img{RealGrid(Shape{static_cast<std::size_t>(h), static_cast<std::size_t>(w)}),
                static_cast<int>(maxval)};
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(img.pixels.size() * bytes);
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw IoError("PGM pixel data is truncated in '" + path.string() + "'");
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const unsigned v = bytes == 2 ? (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
    if (static_cast<long>(v) > maxval) throw IoError("PGM pixel exceeds maxval");
    img.pixels[i] = v;
  }
  return img;
}

GrayImage read_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw IoError("cannot open '" + path.string() + "' for reading");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  std::vector<unsigned char> data;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;
  int depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("'" + path.string() + "' is not a readable PNG");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (depth == 16) png_set_swap(png);  // little-endian samples in memory
  png_read_update_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  data.resize(stride * h);
  rows.resize(h);
  for (png_uint_32 r = 0; r < h; ++r) rows[r] = data.data() + r * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  GrayImage img{RealGrid(Shape{h, w}), depth == 16 ? 65535 : 255};
  for (png_uint_32 r = 0; r < h; ++r)
    for (png_uint_32 c = 0; c < w; ++c) {
      const unsigned char* p = rows[r];
      img.pixels(r, c) = depth == 16 ? double(p[2 * c] | (p[2 * c + 1] << 8)) : double(p[c]);
    }
  return img;
}

GrayImage read_gray(const std::filesystem::path& path) {
  auto is = open_in(path);
  char magic[8] = {};
  is.read(magic, 8);
  if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  if (std::memcmp(magic, "\x89PNG\r\n\x1a\n", 8) == 0) return read_png(path);
  throw IoError("'" + path.string() + "' is neither a binary PGM nor a PNG");
}

ReflectivityImage load_reflectivity(const std::filesystem::path& path) {
  GrayImage img = read_gray(path);
  const double scale = 1.0 / img.max_value;
  for (auto& v : img.pixels) v *= scale;
  return ReflectivityImage(std::move(img.pixels));
}

void write_pgm(const std::filesystem::path& path, const RealGrid& values01, int bits) {
  if (bits != 8 && bits != 16) throw InvalidArgument("PGM bit depth must be 8 or 16");
  const int maxval = bits == 16 ? 65535 : 255;
  std::vector<unsigned char> raw;
  raw.reserve(values01.size() * (bits / 8));
  for (double v : values01) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
    if (bits == 16) raw.push_back(static_cast<unsigned char>(q >> 8));
    raw.push_back(static_cast<unsigned char>(q & 0xff));
  }
  auto os = open_out(path);
  os << "P5\n" << values01.cols() << ' ' << values01.rows() << '\n' << maxval << '\n';
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// CFLD

std::string format_cfld_header(const CfldHeader& h) {
  char sig[64], al[64];
  std::snprintf(sig, sizeof sig, "%.17g", h.sigma_z);
  if (h.alpha_true)
    std::snprintf(al, sizeof al, "%.17g", *h.alpha_true);
  else
    std::snprintf(al, sizeof al, "-1");
  std::ostringstream os;
  os << h.rows << ' ' << h.cols << ' ' << h.looks << ' ' << sig << ' ' << al << ' ' << h.seed;
  return os.str();
}

CfldHeader parse_cfld_header(std::string_view line) {
  std::vector<std::string_view> tok;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(' ', start);
    tok.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (tok.size() != 6) throw IoError("CFLD header must have exactly 6 space-separated fields");
  CfldHeader h;
  h.rows = parse_exact<std::size_t>(tok[0], "rows");
  h.cols = parse_exact<std::size_t>(tok[1], "cols");
  h.looks = parse_exact<int>(tok[2], "looks");
  h.sigma_z = parse_exact<double>(tok[3], "sigma_z");
  const double a = parse_exact<double>(tok[4], "alpha");
  h.seed = parse_exact<std::uint64_t>(tok[5], "seed");
  if (h.rows == 0 || h.cols == 0 || h.looks < 1) throw IoError("CFLD header: empty dimensions");
  if (!(h.sigma_z > 0.0) || !std::isfinite(h.sigma_z)) throw IoError("CFLD header: sigma_z <= 0");
  if (a == -1.0)
    h.alpha_true.reset();
  else if (a >= 0.0 && a <= 1.0)
    h.alpha_true = a;
  else
    throw IoError("CFLD header: alpha must be in [0, 1] or -1");
  return h;
}

void write_cfld(std::ostream& os, const MeasurementSet& meas, bool alpha_known) {
  meas.validate();
  CfldHeader h{meas.shape().rows, meas.shape().cols, meas.size(), meas.params.sigma_z,
               alpha_known ? std::optional<double>(meas.params.alpha) : std::nullopt,
               meas.params.seed};
  os << kCfldMagic << format_cfld_header(h) << '\n';
  for (const auto& y : meas.looks)
    for (const auto& v : y) {
      put_f64(os, v.real());
      put_f64(os, v.imag());
    }
  if (!os) throw IoError("failed writing CFLD data");
}

void write_cfld(const std::filesystem::path& path, const MeasurementSet& meas, bool alpha_known) {
  auto os = open_out(path);
  write_cfld(os, meas, alpha_known);
}

CfldFile read_cfld(std::istream& is) {
  std::string magic(kCfldMagic.size(), '\0');
  if (!is.read(magic.data(), static_cast<std::streamsize>(magic.size())) || magic != kCfldMagic)
    throw IoError("not a CFLD file (bad magic)");
  std::string line;
  if (!std::getline(is, line)) throw IoError("CFLD header line missing");
  CfldFile f;
  f.header = parse_cfld_header(line);
  f.meas.params.looks = f.header.looks;
  f.meas.params.sigma_z = f.header.sigma_z;
  f.meas.params.alpha = f.header.alpha_true.value_or(0.0);
  f.meas.params.seed = f.header.seed;
  const Shape shape{f.header.rows, f.header.cols};
  for (int l = 0; l < f.header.looks; ++l) {
    ComplexField y(shape);
    for (auto& v : y) {
      const double re = get_f64(is);
      v = cplx(re, get_f64(is));
    }
    f.meas.looks.push_back(std::move(y));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("CFLD file has trailing bytes");
  return f;
}

CfldFile read_cfld(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_cfld(is);
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> read_run_config(const std::filesystem::path& path,
                                                   const std::vector<std::string>& allowed) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path.string() + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": unknown key '" +
                            key + "'");
    out[key] = value;
  }
  return out;
}

}  // namespace speckle::io
