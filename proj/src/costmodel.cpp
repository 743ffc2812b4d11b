#include "ddpseg/costmodel.hpp"

#include <algorithm>
#include <cmath>

#include "text_util.hpp"

namespace ddpseg {

Polarity parse_polarity(std::string_view name) {
  if (name == "dark-to-bright" || name == "d2b") return Polarity::DarkToBright;
  if (name == "bright-to-dark" || name == "b2d") return Polarity::BrightToDark;
  throw ValidationError("unknown polarity '" + std::string(name) + "'");
}

std::string_view to_string(Polarity p) {
  return p == Polarity::DarkToBright ? "dark-to-bright" : "bright-to-dark";
}

ProbabilityVolume softmax_z(const LogitVolume& logits) {
  ProbabilityVolume p(logits.surfaces(), logits.width(), logits.height());
  for (int i = 0; i < logits.surfaces(); ++i)
    for (int x = 0; x < logits.width(); ++x) {
      const auto in = logits.column(i, x);
      auto out = p.column(i, x);
      const double m = *std::max_element(in.begin(), in.end());
      double sum = 0.0;
      for (std::size_t z = 0; z < in.size(); ++z) sum += out[z] = std::exp(in[z] - m);
      for (double& v : out) v /= sum;
    }
  return p;
}

MuEstimate surface_mu(const ProbabilityVolume& p) {
  MuEstimate mu(p.surfaces(), p.width());
  for (int i = 0; i < p.surfaces(); ++i)
    for (int x = 0; x < p.width(); ++x) {
      const auto col = p.column(i, x);
      double s = 0.0;
      for (std::size_t z = 0; z < col.size(); ++z) s += static_cast<double>(z) * col[z];
      mu(i, x) = s;
    }
  return mu;
}

CostVolume cost_from_mu(const MuEstimate& mu, int height) {
  if (height < 1) throw ValidationError("cost volume height must be positive");
  CostVolume c(mu.surfaces(), mu.width(), height);
  for (int i = 0; i < mu.surfaces(); ++i)
    for (int x = 0; x < mu.width(); ++x)
      for (int z = 0; z < height; ++z) {
        const double d = z - mu(i, x);
        c(i, x, z) = -(d * d);
      }
  return c;
}

SurfaceSet d_mu_from_cost(const CostVolume& d_cost, const MuEstimate& mu) {
  if (d_cost.surfaces() != mu.surfaces() || d_cost.width() != mu.width())
    throw DimensionError("cost cotangent and mu disagree in shape");
  SurfaceSet d_mu(mu.surfaces(), mu.width());
  for (int i = 0; i < mu.surfaces(); ++i)
    for (int x = 0; x < mu.width(); ++x) {
      double s = 0.0;
      for (int z = 0; z < d_cost.height(); ++z) s += d_cost(i, x, z) * 2.0 * (z - mu(i, x));
      d_mu(i, x) = s;
    }
  return d_mu;
}

void accumulate_d_p_from_mu(const SurfaceSet& d_mu, ProbabilityVolume& d_p) {
  if (d_p.surfaces() != d_mu.surfaces() || d_p.width() != d_mu.width())
    throw DimensionError("mu cotangent and probability cotangent disagree in shape");
  for (int i = 0; i < d_p.surfaces(); ++i)
    for (int x = 0; x < d_p.width(); ++x)
      for (int z = 0; z < d_p.height(); ++z) d_p(i, x, z) += z * d_mu(i, x);
}

LogitVolume d_logits_from_p(const ProbabilityVolume& p, const ProbabilityVolume& d_p) {
  if (!p.same_shape(d_p)) throw DimensionError("probability and cotangent disagree in shape");
  LogitVolume d(p.surfaces(), p.width(), p.height());
  for (int i = 0; i < p.surfaces(); ++i)
    for (int x = 0; x < p.width(); ++x) {
      const auto pc = p.column(i, x);
      const auto dc = d_p.column(i, x);
      double dot = 0.0;
      for (std::size_t z = 0; z < pc.size(); ++z) dot += pc[z] * dc[z];
      auto out = d.column(i, x);
      for (std::size_t z = 0; z < pc.size(); ++z) out[z] = pc[z] * (dc[z] - dot);
    }
  return d;
}

LogitVolume heuristic_logits(const ChannelStack& stack, std::span<const Polarity> polarity, double gain) {
  if (polarity.empty()) throw ValidationError("heuristic logits need at least one surface");
  if (!std::isfinite(gain) || gain < 0.0) throw ValidationError("gain must be finite and nonnegative");
  const auto& g90 = stack[Channel::Grad90];
  const int n = static_cast<int>(polarity.size());
  LogitVolume out(n, stack.width(), stack.height());
  for (int i = 0; i < n; ++i) {
    const double sign = polarity[i] == Polarity::DarkToBright ? 1.0 : -1.0;
    for (int x = 0; x < stack.width(); ++x)
      for (int z = 0; z < stack.height(); ++z) out(i, x, z) = gain * sign * g90(x, z);
  }
  return out;
}

SurfaceSet column_argmax(const Grid3<double>& v) {
  SurfaceSet out(v.surfaces(), v.width());
  for (int i = 0; i < v.surfaces(); ++i)
    for (int x = 0; x < v.width(); ++x) {
      const auto col = v.column(i, x);
      out(i, x) = static_cast<double>(std::max_element(col.begin(), col.end()) - col.begin());
    }
  return out;
}

std::string serialize_volume(const Grid3<double>& v) {
  std::string out = std::to_string(v.surfaces()) + "\n" + std::to_string(v.width()) + "\n" +
                    std::to_string(v.height()) + "\n";
  for (int i = 0; i < v.surfaces(); ++i)
    for (int x = 0; x < v.width(); ++x) {
      const auto col = v.column(i, x);
      for (std::size_t z = 0; z < col.size(); ++z) {
        if (z) out += ',';
        out += format_double(col[z]);
      }
      out += '\n';
    }
  return out;
}

Grid3<double> parse_volume(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.size() < 3) throw ParseError("volume CSV: missing N/X/Z header lines");
  int dims[3];
  const char* names[3] = {"N", "X", "Z"};
  for (int k = 0; k < 3; ++k) {
    const auto v = detail::parse_int(lines[k]);
    if (!v || *v < 1) throw ParseError(std::string("volume CSV row ") + std::to_string(k) + ": bad " + names[k]);
    dims[k] = *v;
  }
  const std::size_t expected = static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]);
  if (lines.size() - 3 != expected)
    throw ParseError("volume CSV: expected " + std::to_string(expected) + " data rows, found " +
                     std::to_string(lines.size() - 3));
  Grid3<double> v(dims[0], dims[1], dims[2]);
  std::size_t r = 3;
  for (int i = 0; i < dims[0]; ++i)
    for (int x = 0; x < dims[1]; ++x, ++r) {
      const auto fields = detail::split(lines[r], ',');
      if (static_cast<int>(fields.size()) != dims[2])
        throw ParseError("volume CSV row " + std::to_string(r) + ": expected " + std::to_string(dims[2]) +
                         " columns, found " + std::to_string(fields.size()));
      for (int z = 0; z < dims[2]; ++z) {
        const auto val = detail::parse_double(fields[z]);
        if (!val || !std::isfinite(*val))
          throw ParseError("volume CSV row " + std::to_string(r) + ", column " + std::to_string(z) +
                           ": not a finite number");
        v(i, x, z) = *val;
      }
    }
  return v;
}

void write_volume(const Grid3<double>& v, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_volume(v));
}

Grid3<double> read_volume(const std::filesystem::path& path) {
  try {
    return parse_volume(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace ddpseg
