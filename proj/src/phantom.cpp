#include "ddpseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"

namespace ddpseg {

PortableRng::PortableRng(std::uint64_t seed) : engine_(seed) {}

double PortableRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double PortableRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

PhantomSpec PhantomSpec::with_surfaces(int n) {
  if (n < 1) throw ValidationError("phantom needs at least one surface");
  PhantomSpec s;
  s.surfaces = n;
  s.amplitude.assign(static_cast<std::size_t>(n), 4.0);
  s.wavelength.assign(static_cast<std::size_t>(n), 64.0);
  s.contrasts.resize(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) s.contrasts[k] = k % 2 == 0 ? 0.15 : 0.75;
  return s;
}

void PhantomSpec::validate() const {
  if (width < 2 || height < 2) throw ValidationError("phantom must be at least 2x2");
  if (surfaces < 1) throw ValidationError("phantom needs at least one surface");
  const auto n = static_cast<std::size_t>(surfaces);
  if (amplitude.size() != n || wavelength.size() != n)
    throw ValidationError("need one amplitude and one wavelength per surface");
  if (contrasts.size() != n + 1) throw ValidationError("need N+1 layer contrasts");
  for (double a : amplitude)
    if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("amplitude must be finite and nonnegative");
  for (double w : wavelength)
    if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("wavelength must be positive");
  for (double c : contrasts)
    if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("layer contrasts must lie in [0,1]");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise sigma must be >= 0");
  if (!(min_gap >= 0.0)) throw ValidationError("min gap must be >= 0");
  if (!(surfaces * min_gap < height))
    throw ValidationError("layers cannot fit: N * min_gap must be below Z");
  for (const auto& d : dropouts)
    if (d.surface < 0 || d.surface >= surfaces || d.start < 0 || d.start >= d.end || d.end > width)
      throw ValidationError("dropout span out of range");
}

std::vector<Polarity> PhantomSpec::polarities() const {
  std::vector<Polarity> out;
  for (int i = 0; i < surfaces; ++i)
    out.push_back(contrasts[i + 1] >= contrasts[i] ? Polarity::DarkToBright : Polarity::BrightToDark);
  return out;
}

Phantom generate(const PhantomSpec& spec) {
  spec.validate();
  const int N = spec.surfaces;
  const int X = spec.width;
  const int Z = spec.height;
  PortableRng rng(spec.seed);

  SurfaceSet s(N, X);
  std::vector<int> bound(static_cast<std::size_t>(N), 0);
  for (int i = 0; i < N; ++i) {
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    const double base = (i + 1) * static_cast<double>(Z) / (N + 1);
    const double omega = 2.0 * std::numbers::pi / spec.wavelength[i];
    for (int x = 0; x < X; ++x) {
      double z = std::clamp(base + spec.amplitude[i] * std::sin(omega * x + phase), 0.0, Z - 1.0);
      if (i > 0) z = std::max(z, s(i - 1, x) + spec.min_gap);
      if (z > Z - 1.0) throw ValidationError("layers cannot fit: surface " + std::to_string(i) + " leaves the image");
      s(i, x) = z;
    }
    bound[i] = static_cast<int>(std::ceil(spec.amplitude[i] * omega));
    if (i > 0) bound[i] = std::max(bound[i], bound[i - 1]);
  }

  Grid2<double> img(X, Z);
  std::vector<double> c(spec.contrasts.size());
  for (int x = 0; x < X; ++x) {
    std::copy(spec.contrasts.begin(), spec.contrasts.end(), c.begin());
    for (const auto& d : spec.dropouts)
      if (x >= d.start && x < d.end) {
        const double m = 0.5 * (spec.contrasts[d.surface] + spec.contrasts[d.surface + 1]);
        c[d.surface] = c[d.surface + 1] = m;
      }
    for (int z = 0; z < Z; ++z) {
      double v = c[0];
      for (int i = 0; i < N; ++i) v += (c[i + 1] - c[i]) * std::clamp(z + 0.5 - s(i, x), 0.0, 1.0);
      img(x, z) = v;
    }
  }
  if (spec.noise_sigma > 0.0)
    for (int x = 0; x < X; ++x)
      for (int z = 0; z < Z; ++z) img(x, z) = std::clamp(img(x, z) + spec.noise_sigma * rng.normal(), 0.0, 1.0);
  else
    for (double& v : img.values()) v = std::clamp(v, 0.0, 1.0);

  return Phantom{BScan(std::move(img)), GroundTruth(std::move(s), Z), std::move(bound)};
}

namespace {

std::vector<double> per_surface(const nlohmann::json& j, int n, const char* key) {
  const auto& v = j.at(key);
  if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(n), v.get<double>());
  return v.get<std::vector<double>>();
}

}  // namespace

PhantomSpec phantom_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("phantom JSON: ") + e.what());
  }
  try {
    if (j.contains("version") && j["version"].get<int>() != 1)
      throw ValidationError("unsupported phantom JSON version");
    const int n = j.value("surfaces", 2);
    PhantomSpec s = PhantomSpec::with_surfaces(n);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.seed = j.value("seed", s.seed);
    if (j.contains("amplitude")) s.amplitude = per_surface(j, n, "amplitude");
    if (j.contains("wavelength")) s.wavelength = per_surface(j, n, "wavelength");
    if (j.contains("contrasts")) s.contrasts = j["contrasts"].get<std::vector<double>>();
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.min_gap = j.value("min_gap", s.min_gap);
    if (j.contains("dropouts"))
      for (const auto& d : j["dropouts"])
        s.dropouts.push_back({d.at("surface").get<int>(), d.at("start").get<int>(), d.at("end").get<int>()});
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("phantom JSON: ") + e.what());
  }
}

std::string to_json(const PhantomSpec& s) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["width"] = s.width;
  j["height"] = s.height;
  j["surfaces"] = s.surfaces;
  j["seed"] = s.seed;
  j["amplitude"] = s.amplitude;
  j["wavelength"] = s.wavelength;
  j["contrasts"] = s.contrasts;
  j["noise_sigma"] = s.noise_sigma;
  j["min_gap"] = s.min_gap;
  j["dropouts"] = nlohmann::ordered_json::array();
  for (const auto& d : s.dropouts)
    j["dropouts"].push_back({{"surface", d.surface}, {"start", d.start}, {"end", d.end}});
  return j.dump(2) + "\n";
}

}  // namespace ddpseg
