#pragma once

// File formats: binary PGM (P5, 8/16-bit), PNG input, the CFLD complex-field
// container, flat key=value run configs.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "speckle/core.hpp"
#include "speckle/sim.hpp"

namespace speckle::io {

/// Raw grayscale pixels plus the format's maximum value (255 or 65535 etc.).
struct GrayImage {
  RealGrid pixels;
  int max_value = 255;
};

GrayImage read_pgm(const std::filesystem::path& path);
GrayImage read_png(const std::filesystem::path& path);
/// Dispatches on the file's magic bytes.
GrayImage read_gray(const std::filesystem::path& path);

/// Reflectivity on the normalized scale: 8-bit pixel p maps to p / 255,
/// a 16-bit pixel to p / 65535.
ReflectivityImage load_reflectivity(const std::filesystem::path& path);

/// Writes values in [0, 1] as P5 with the given bit depth (8 or 16).
/// Values are clamped to [0, 1] and rounded to the nearest level.
void write_pgm(const std::filesystem::path& path, const RealGrid& values01, int bits = 16);

inline constexpr std::string_view kCfldMagic = "CFLD1\n";

struct CfldHeader {
  std::size_t rows = 0;
  std::size_t cols = 0;
  int looks = 0;
  double sigma_z = 0.0;               // normalized scale
  std::optional<double> alpha_true;  // written as -1 when unknown
  std::uint64_t seed = 0;
};

/// Parses exactly "<rows> <cols> <looks> <sigma_z> <alpha_or_-1> <seed>".
CfldHeader parse_cfld_header(std::string_view line);
std::string format_cfld_header(const CfldHeader& h);

void write_cfld(std::ostream& os, const MeasurementSet& meas, bool alpha_known = true);
void write_cfld(const std::filesystem::path& path, const MeasurementSet& meas,
                bool alpha_known = true);

struct CfldFile {
  CfldHeader header;
  MeasurementSet meas;  // params.alpha is 0 when the header says -1
};

CfldFile read_cfld(std::istream& is);
CfldFile read_cfld(const std::filesystem::path& path);

/// Flat key=value lines; '#' starts a comment, blank lines are skipped.
/// Keys must be in `allowed`; anything else is an InvalidArgument.
std::map<std::string, std::string> read_run_config(const std::filesystem::path& path,
                                                   const std::vector<std::string>& allowed);

}  // namespace speckle::io
