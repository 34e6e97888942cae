#include <png.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "speckle/io.hpp"

using namespace speckle;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("speckle_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  os << bytes;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void write_png(const fs::path& p, int w, int h, int color_type, int depth,
               const std::vector<unsigned char>& raw) {
  FILE* fp = std::fopen(p.c_str(), "wb");
  REQUIRE(fp);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t stride = std::size_t(w) * channels * (depth / 8);
  for (int r = 0; r < h; ++r)
    png_write_row(png, const_cast<unsigned char*>(raw.data() + r * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

MeasurementSet small_meas() {
  const Shape s{3, 5};
  return simulate_measurements(ReflectivityImage(s, 0.4), test::aperture("full", s),
                               {3, 0.25, 0.1, 77});
}

}  // namespace

TEST_CASE("PGM read with comments, 8 and 16 bit") {
  TempDir dir;
  write_bytes(dir / "a.pgm", std::string("P5\n# comment\n3 1\n255\n") + char(0) + char(128) + char(255));
  auto img = io::read_pgm(dir / "a.pgm");
  CHECK(img.max_value == 255);
  CHECK(img.pixels[1] == 128.0);
  const auto x = io::load_reflectivity(dir / "a.pgm");
  CHECK(x[2] == 1.0);
  CHECK(x[1] == doctest::Approx(128.0 / 255.0));

  write_bytes(dir / "b.pgm", std::string("P5 2 1 65535 ") + char(1) + char(2) + char(255) + char(255));
  img = io::read_gray(dir / "b.pgm");
  CHECK(img.max_value == 65535);
  CHECK(img.pixels[0] == 258.0);
  CHECK(img.pixels[1] == 65535.0);
}

TEST_CASE("PGM write round trip") {
  TempDir dir;
  RealGrid g({4, 6});
  RngStream rng(1, "pgm");
  for (auto& v : g) v = rng.uniform();
  g[0] = -0.5;  // clamped
  g[1] = 2.0;
  io::write_pgm(dir / "w16.pgm", g, 16);
  const auto back = io::load_reflectivity(dir / "w16.pgm");
  CHECK(back[0] == 0.0);
  CHECK(back[1] == 1.0);
  for (std::size_t i = 2; i < g.size(); ++i) CHECK(std::abs(back[i] - g[i]) <= 0.5 / 65535.0 + 1e-15);
  io::write_pgm(dir / "w8.pgm", g, 8);
  const auto b8 = io::read_pgm(dir / "w8.pgm");
  CHECK(b8.max_value == 255);
  for (std::size_t i = 2; i < g.size(); ++i) CHECK(b8.pixels[i] == std::round(g[i] * 255.0));
  CHECK_THROWS_AS(io::write_pgm(dir / "w.pgm", g, 12), InvalidArgument);
}

TEST_CASE("malformed images are rejected") {
  TempDir dir;
  CHECK_THROWS_AS(io::read_gray(dir / "missing.pgm"), IoError);
  write_bytes(dir / "p2.pgm", "P2\n1 1\n255\n0\n");
  CHECK_THROWS_AS(io::read_gray(dir / "p2.pgm"), IoError);
  write_bytes(dir / "short.pgm", std::string("P5\n2 2\n255\n") + char(1));
  CHECK_THROWS_AS(io::read_pgm(dir / "short.pgm"), IoError);
  write_bytes(dir / "zero.pgm", "P5\n0 2\n255\n");
  CHECK_THROWS_AS(io::read_pgm(dir / "zero.pgm"), IoError);
  write_bytes(dir / "junk.png", "\x89PNG\r\n\x1a\nnot really");
  CHECK_THROWS_AS(io::read_gray(dir / "junk.png"), IoError);
}

TEST_CASE("PNG input") {
  TempDir dir;
  write_png(dir / "g8.png", 2, 2, PNG_COLOR_TYPE_GRAY, 8, {0, 51, 102, 255});
  auto img = io::read_gray(dir / "g8.png");
  CHECK(img.max_value == 255);
  CHECK(img.pixels(0, 1) == 51.0);
  CHECK(img.pixels(1, 1) == 255.0);

  write_png(dir / "g16.png", 1, 2, PNG_COLOR_TYPE_GRAY, 16, {0x12, 0x34, 0xff, 0xff});
  img = io::read_png(dir / "g16.png");
  CHECK(img.max_value == 65535);
  CHECK(img.pixels[0] == double(0x1234));

  write_png(dir / "rgb.png", 1, 1, PNG_COLOR_TYPE_RGB, 8, {200, 200, 200});
  img = io::read_gray(dir / "rgb.png");
  CHECK(img.pixels[0] == doctest::Approx(200.0).epsilon(0.01));
}

TEST_CASE("CFLD header grammar") {
  const auto h = io::parse_cfld_header("256 128 4 0.058823529411764705 0.5 12");
  CHECK(h.rows == 256);
  CHECK(h.cols == 128);
  CHECK(h.looks == 4);
  CHECK(h.alpha_true == 0.5);
  CHECK(h.seed == 12);
  CHECK_FALSE(io::parse_cfld_header("2 2 1 0.1 -1 0").alpha_true);
  CHECK(io::parse_cfld_header(io::format_cfld_header(h)).sigma_z == h.sigma_z);
  for (const char* bad : {"", "2 2 1 0.1 -1", "2 2 1 0.1 -1 0 9", "2  2 1 0.1 -1 0", " 2 2 1 0.1 -1 0",
                          "2 2 1 0.1 -1 0 ", "2 2 0 0.1 -1 0", "2 2 1 0 -1 0", "2 2 1 0.1 1.5 0",
                          "2 2 1 0.1 -0.5 0", "2x 2 1 0.1 -1 0", "2 2 1 0.1 -1 -3", "0 2 1 0.1 -1 0"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(io::parse_cfld_header(bad), IoError);
  }
}

TEST_CASE("CFLD round trip is bitwise exact") {
  const auto m = small_meas();
  std::stringstream ss;
  io::write_cfld(ss, m);
  const std::string bytes = ss.str();
  CHECK(bytes.rfind("CFLD1\n", 0) == 0);
  const auto nl = bytes.find('\n', 6);
  CHECK(bytes.size() - (nl + 1) == 3u * 3u * 5u * 16u);

  std::stringstream in(bytes);
  const auto f = io::read_cfld(in);
  CHECK(f.header.looks == 3);
  CHECK(f.header.alpha_true == 0.25);
  CHECK(f.header.seed == 77);
  for (int l = 0; l < 3; ++l) {
    REQUIRE(f.meas.looks[l].size() == m.looks[l].size());
    CHECK(std::memcmp(f.meas.looks[l].data(), m.looks[l].data(), m.looks[l].size() * sizeof(cplx)) == 0);
  }
  std::stringstream again;
  io::write_cfld(again, f.meas);
  CHECK(again.str() == bytes);

  // little-endian real part first
  double re = 0.0;
  std::memcpy(&re, bytes.data() + nl + 1, 8);
  CHECK(re == m.looks[0][0].real());
}

TEST_CASE("CFLD errors") {
  const auto m = small_meas();
  std::stringstream ss;
  io::write_cfld(ss, m, false);
  const std::string bytes = ss.str();
  {
    std::stringstream in(bytes);
    CHECK_FALSE(io::read_cfld(in).header.alpha_true);
  }
  {
    std::stringstream in(bytes.substr(0, bytes.size() - 1));
    CHECK_THROWS_AS(io::read_cfld(in), IoError);
  }
  {
    std::stringstream in(bytes + "x");
    CHECK_THROWS_AS(io::read_cfld(in), IoError);
  }
  {
    std::stringstream in("CFLD2\n" + bytes.substr(6));
    CHECK_THROWS_AS(io::read_cfld(in), IoError);
  }
  CHECK_THROWS_AS(io::read_cfld(fs::path("/nonexistent/file.cfld")), IoError);
}

TEST_CASE("run config") {
  TempDir dir;
  write_bytes(dir / "c.cfg", "# run\niters = 20\n\nalpha=auto # inline\n");
  const auto cfg = io::read_run_config(dir / "c.cfg", {"iters", "alpha", "seed"});
  CHECK(cfg.size() == 2);
  CHECK(cfg.at("iters") == "20");
  CHECK(cfg.at("alpha") == "auto");
  write_bytes(dir / "bad.cfg", "iters=3\nitres=4\n");
  CHECK_THROWS_AS(io::read_run_config(dir / "bad.cfg", {"iters"}), InvalidArgument);
  write_bytes(dir / "noeq.cfg", "iters 3\n");
  CHECK_THROWS_AS(io::read_run_config(dir / "noeq.cfg", {"iters"}), InvalidArgument);
  CHECK_THROWS_AS(io::read_run_config(dir / "none.cfg", {"iters"}), IoError);
}
