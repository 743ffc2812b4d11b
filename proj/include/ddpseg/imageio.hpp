#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ddpseg/grid.hpp"

namespace ddpseg {

// A 2D B-scan: X columns (A-scans) by Z rows, intensities in [0,1],
// indexed (x, z).
class BScan {
 public:
  BScan() = default;
  // Throws ValidationError unless X >= 2, Z >= 2 and every value is finite
  // and within [0,1].
  explicit BScan(Grid2<double> intensities);

  int width() const { return pixels_.rows(); }
  int height() const { return pixels_.cols(); }
  double operator()(int x, int z) const { return pixels_(x, z); }
  const Grid2<double>& pixels() const { return pixels_; }

 private:
  Grid2<double> pixels_;
};

// N x X fractional surface positions z_x^(i), used for predictions,
// ground-truth tracings and soft-argmax estimates alike.
class SurfaceSet {
 public:
  SurfaceSet() = default;
  SurfaceSet(int surfaces, int width, double fill = 0.0) : z_(surfaces, width, fill) {}
  explicit SurfaceSet(Grid2<double> positions) : z_(std::move(positions)) {}

  int surfaces() const { return z_.rows(); }
  int width() const { return z_.cols(); }
  double& operator()(int i, int x) { return z_(i, x); }
  double operator()(int i, int x) const { return z_(i, x); }
  std::span<double> surface(int i) { return z_.row(i); }
  std::span<const double> surface(int i) const { return z_.row(i); }
  const Grid2<double>& grid() const { return z_; }
  std::span<double> values() { return z_.values(); }
  std::span<const double> values() const { return z_.values(); }

  bool same_shape(const SurfaceSet& o) const { return z_.same_shape(o.z_); }
  bool operator==(const SurfaceSet&) const = default;

 private:
  Grid2<double> z_;
};

enum class Channel : int {
  Raw = 0,
  Grad0 = 1,
  Grad45 = 2,
  Grad90 = 3,
  Grad135 = 4,
  Dir0_90 = 5,
  Dir45_135 = 6,
  Magnitude = 7,
};
inline constexpr int kChannelCount = 8;

// Raw image followed by the seven gradient channels, each X x Z.
class ChannelStack {
 public:
  ChannelStack(int width, int height);

  int width() const { return channels_[0].rows(); }
  int height() const { return channels_[0].cols(); }
  Grid2<double>& operator[](Channel c) { return channels_[static_cast<int>(c)]; }
  const Grid2<double>& operator[](Channel c) const { return channels_[static_cast<int>(c)]; }

 private:
  std::array<Grid2<double>, kChannelCount> channels_;
};

enum class ImageFormat { Pgm16, Csv };

// Parses "pgm" / "pgm16" / "csv"; throws ValidationError otherwise.
ImageFormat parse_image_format(std::string_view name);
// Picks the format from the file extension (.pgm or .csv).
ImageFormat format_from_extension(const std::filesystem::path& path);

// CSV layout: one line per image row z, comma-separated values for x = 0..X-1,
// each within [0,1]. PGM: binary P5; samples are divided by maxval.
BScan parse_bscan(std::string_view text, ImageFormat format);
BScan load_bscan(const std::filesystem::path& path, ImageFormat format);

std::string serialize_bscan(const BScan& img, ImageFormat format);
void save_bscan(const BScan& img, const std::filesystem::path& path, ImageFormat format);

// Directional central differences (0°, 45°, 90°, 135°), the two normalized
// direction channels and the rescaled magnitude. Accepts any finite grid so
// the intensity-shift property can be checked outside [0,1].
ChannelStack gradient_channels(const Grid2<double>& intensities);
inline ChannelStack gradient_channels(const BScan& img) { return gradient_channels(img.pixels()); }

// Surface CSV: header `surface,x,z`, one record per (i,x), z printed with
// 17 significant digits. When `height` is given, z must lie in [0, height-1];
// z < 0 is always rejected.
SurfaceSet parse_surfaces(std::string_view text, std::optional<int> height = std::nullopt);
SurfaceSet read_surfaces(const std::filesystem::path& path, std::optional<int> height = std::nullopt);
std::string serialize_surfaces(const SurfaceSet& s);
void write_surfaces(const SurfaceSet& s, const std::filesystem::path& path);

// Whole-file helpers. Writes go to a sibling temp file that is renamed over
// the destination.
std::string read_text_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// 17 significant digits; parses back to the identical double.
std::string format_double(double v);

}  // namespace ddpseg
