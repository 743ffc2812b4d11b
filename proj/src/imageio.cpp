#include "ddpseg/imageio.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <system_error>
#include <utility>
#include <vector>

#include "text_util.hpp"

namespace ddpseg {

BScan::BScan(Grid2<double> intensities) : pixels_(std::move(intensities)) {
  if (pixels_.rows() < 2 || pixels_.cols() < 2)
    throw ValidationError("B-scan must be at least 2x2, got " + std::to_string(pixels_.rows()) + "x" +
                          std::to_string(pixels_.cols()));
  for (int x = 0; x < pixels_.rows(); ++x)
    for (int z = 0; z < pixels_.cols(); ++z) {
      const double v = pixels_(x, z);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw ValidationError("intensity at x=" + std::to_string(x) + ", z=" + std::to_string(z) +
                              " outside [0,1]");
    }
}

ChannelStack::ChannelStack(int width, int height) {
  for (auto& c : channels_) c = Grid2<double>(width, height, 0.0);
}

ImageFormat parse_image_format(std::string_view name) {
  if (name == "pgm" || name == "pgm16") return ImageFormat::Pgm16;
  if (name == "csv") return ImageFormat::Csv;
  throw ValidationError("unknown image format '" + std::string(name) + "'");
}

ImageFormat format_from_extension(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pgm") return ImageFormat::Pgm16;
  if (ext == ".csv") return ImageFormat::Csv;
  throw ValidationError("cannot infer image format from '" + path.string() + "'");
}

namespace {

BScan parse_csv_image(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw ParseError("empty CSV image");
  const int rows = static_cast<int>(lines.size());
  int cols = -1;
  std::vector<std::vector<double>> values;
  values.reserve(lines.size());
  for (int r = 0; r < rows; ++r) {
    const auto fields = detail::split(lines[r], ',');
    if (cols < 0) {
      cols = static_cast<int>(fields.size());
    } else if (static_cast<int>(fields.size()) != cols) {
      throw ParseError("row " + std::to_string(r) + ": expected " + std::to_string(cols) + " columns, found " +
                       std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = detail::parse_double(fields[c]);
      if (!v)
        throw ParseError("row " + std::to_string(r) + ", column " + std::to_string(c) + ": not a number '" +
                         std::string(detail::trim(fields[c])) + "'");
      if (!(*v >= 0.0 && *v <= 1.0))
        throw ParseError("row " + std::to_string(r) + ", column " + std::to_string(c) +
                         ": value outside [0,1]");
      row[c] = *v;
    }
    values.push_back(std::move(row));
  }
  // CSV rows are image rows (z); columns are A-scans (x).
  Grid2<double> g(cols, rows);
  for (int z = 0; z < rows; ++z)
    for (int x = 0; x < cols; ++x) g(x, z) = values[z][x];
  return BScan(std::move(g));
}

class PgmReader {
 public:
  explicit PgmReader(std::string_view data) : data_(data) {}

  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      const char c = data_[pos_];
      if (c == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long header_int(const char* what) {
    skip_space_and_comments();
    const char* begin = data_.data() + pos_;
    const char* end = data_.data() + data_.size();
    long v = 0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr == begin) throw ParseError(std::string("PGM header: malformed ") + what);
    pos_ += static_cast<std::size_t>(ptr - begin);
    return v;
  }

  std::size_t pos_ = 0;
  std::string_view data_;
};

BScan parse_pgm(std::string_view data) {
  if (data.size() < 2 || data.substr(0, 2) != "P5") throw ParseError("PGM header: expected magic 'P5'");
  PgmReader rd(data);
  rd.pos_ = 2;
  const long width = rd.header_int("width");
  const long height = rd.header_int("height");
  const long maxval = rd.header_int("maxval");
  if (width < 1 || height < 1) throw ParseError("PGM header: non-positive dimensions");
  if (maxval < 1 || maxval > 65535) throw ParseError("PGM header: maxval outside [1,65535]");
  if (rd.pos_ >= data.size()) throw ParseError("PGM header: missing raster");
  ++rd.pos_;  // single whitespace byte before the raster
  const int bytes = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * bytes;
  if (data.size() - rd.pos_ < need)
    throw ParseError("PGM raster truncated: need " + std::to_string(need) + " bytes");
  const auto* raster = reinterpret_cast<const unsigned char*>(data.data() + rd.pos_);
  Grid2<double> g(static_cast<int>(width), static_cast<int>(height));
  for (long z = 0; z < height; ++z)
    for (long x = 0; x < width; ++x) {
      const std::size_t k = static_cast<std::size_t>(z * width + x);
      const unsigned sample = bytes == 2 ? (unsigned{raster[2 * k]} << 8) | raster[2 * k + 1] : raster[k];
      if (sample > static_cast<unsigned>(maxval))
        throw ParseError("PGM sample at row " + std::to_string(z) + ", column " + std::to_string(x) +
                         " exceeds maxval");
      g(static_cast<int>(x), static_cast<int>(z)) = static_cast<double>(sample) / static_cast<double>(maxval);
    }
  return BScan(std::move(g));
}

}  // namespace

BScan parse_bscan(std::string_view text, ImageFormat format) {
  return format == ImageFormat::Csv ? parse_csv_image(text) : parse_pgm(text);
}

BScan load_bscan(const std::filesystem::path& path, ImageFormat format) {
  try {
    return parse_bscan(read_text_file(path), format);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string serialize_bscan(const BScan& img, ImageFormat format) {
  std::string out;
  if (format == ImageFormat::Csv) {
    for (int z = 0; z < img.height(); ++z) {
      for (int x = 0; x < img.width(); ++x) {
        if (x) out += ',';
        out += format_double(img(x, z));
      }
      out += '\n';
    }
    return out;
  }
  out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n65535\n";
  out.reserve(out.size() + static_cast<std::size_t>(img.width()) * img.height() * 2);
  for (int z = 0; z < img.height(); ++z)
    for (int x = 0; x < img.width(); ++x) {
      const auto s = static_cast<std::uint16_t>(std::lround(img(x, z) * 65535.0));
      out += static_cast<char>(s >> 8);
      out += static_cast<char>(s & 0xff);
    }
  return out;
}

void save_bscan(const BScan& img, const std::filesystem::path& path, ImageFormat format) {
  write_file_atomic(path, serialize_bscan(img, format));
}

namespace {

// Central difference along (dx, dz). A neighbor outside the image is
// replaced by the center pixel, and the difference is divided by the
// distance actually spanned, so linear ramps give exact slopes at borders.
double directional(const Grid2<double>& g, int x, int z, int dx, int dz) {
  const int X = g.rows();
  const int Z = g.cols();
  auto inside = [&](int a, int b) { return a >= 0 && a < X && b >= 0 && b < Z; };
  int steps = 0;
  double fwd = g(x, z);
  double bwd = g(x, z);
  if (inside(x + dx, z + dz)) {
    fwd = g(x + dx, z + dz);
    ++steps;
  }
  if (inside(x - dx, z - dz)) {
    bwd = g(x - dx, z - dz);
    ++steps;
  }
  if (steps == 0) return 0.0;
  const double step_len = (dx != 0 && dz != 0) ? std::numbers::sqrt2 : 1.0;
  return (fwd - bwd) / (steps * step_len);
}

double direction(double along, double across) {
  if (along == 0.0 && across == 0.0) return 0.0;
  return std::atan2(across, along) / std::numbers::pi;
}

}  // namespace

ChannelStack gradient_channels(const Grid2<double>& img) {
  const int X = img.rows();
  const int Z = img.cols();
  ChannelStack out(X, Z);
  auto& raw = out[Channel::Raw];
  auto& g0 = out[Channel::Grad0];
  auto& g45 = out[Channel::Grad45];
  auto& g90 = out[Channel::Grad90];
  auto& g135 = out[Channel::Grad135];
  auto& mag = out[Channel::Magnitude];
  double max_mag = 0.0;
  for (int x = 0; x < X; ++x)
    for (int z = 0; z < Z; ++z) {
      raw(x, z) = img(x, z);
      g0(x, z) = directional(img, x, z, 1, 0);
      g45(x, z) = directional(img, x, z, 1, 1);
      g90(x, z) = directional(img, x, z, 0, 1);
      g135(x, z) = directional(img, x, z, -1, 1);
      out[Channel::Dir0_90](x, z) = direction(g0(x, z), g90(x, z));
      out[Channel::Dir45_135](x, z) = direction(g45(x, z), g135(x, z));
      mag(x, z) = std::hypot(g0(x, z), g90(x, z));
      max_mag = std::max(max_mag, mag(x, z));
    }
  for (double& m : mag.values()) m = max_mag > 0.0 ? m / max_mag : 0.0;
  return out;
}

SurfaceSet parse_surfaces(std::string_view text, std::optional<int> height) {
  const auto lines = detail::split_lines(text);
  if (lines.empty() || detail::trim(lines[0]) != "surface,x,z")
    throw ParseError("surface CSV: expected header 'surface,x,z'");
  std::map<std::pair<int, int>, double> records;
  int n = 0;
  int width = 0;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = detail::split(lines[r], ',');
    const std::string where = "surface CSV row " + std::to_string(r);
    if (fields.size() != 3) throw ParseError(where + ": expected 3 fields");
    const auto i = detail::parse_int(fields[0]);
    const auto x = detail::parse_int(fields[1]);
    const auto z = detail::parse_double(fields[2]);
    if (!i || *i < 0) throw ParseError(where + ", column 0: bad surface index");
    if (!x || *x < 0) throw ParseError(where + ", column 1: bad column index");
    if (!z || !std::isfinite(*z)) throw ParseError(where + ", column 2: bad position");
    if (*z < 0.0 || (height && *z > *height - 1))
      throw ValidationError(where + ": position " + format_double(*z) + " outside [0, Z-1]");
    if (!records.emplace(std::pair{*i, *x}, *z).second)
      throw ParseError(where + ": duplicate record for surface " + std::to_string(*i) + ", x " +
                       std::to_string(*x));
    n = std::max(n, *i + 1);
    width = std::max(width, *x + 1);
  }
  if (records.empty()) throw ParseError("surface CSV: no records");
  SurfaceSet out(n, width);
  for (int i = 0; i < n; ++i)
    for (int x = 0; x < width; ++x) {
      auto it = records.find({i, x});
      if (it == records.end())
        throw ParseError("surface CSV: missing record for surface " + std::to_string(i) + ", x " +
                         std::to_string(x));
      out(i, x) = it->second;
    }
  return out;
}

SurfaceSet read_surfaces(const std::filesystem::path& path, std::optional<int> height) {
  try {
    return parse_surfaces(read_text_file(path), height);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string serialize_surfaces(const SurfaceSet& s) {
  std::string out = "surface,x,z\n";
  for (int i = 0; i < s.surfaces(); ++i)
    for (int x = 0; x < s.width(); ++x)
      out += std::to_string(i) + "," + std::to_string(x) + "," + format_double(s(i, x)) + "\n";
  return out;
}

void write_surfaces(const SurfaceSet& s, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_surfaces(s));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "'");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace ddpseg
