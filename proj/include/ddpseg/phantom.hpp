#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ddpseg/costmodel.hpp"
#include "ddpseg/evalloss.hpp"
#include "ddpseg/imageio.hpp"

namespace ddpseg {

// Columns [start, end) of one surface lose their boundary contrast.
struct DropoutSpan {
  int surface = 0;
  int start = 0;
  int end = 0;
  bool operator==(const DropoutSpan&) const = default;
};

struct PhantomSpec {
  int width = 128;
  int height = 64;
  int surfaces = 2;
  std::uint64_t seed = 1;
  std::vector<double> amplitude{4.0, 4.0};          // pixels, per surface
  std::vector<double> wavelength{64.0, 64.0};       // pixels, per surface
  std::vector<double> contrasts{0.15, 0.75, 0.15};  // N + 1 layer intensities, top to bottom
  double noise_sigma = 0.0;
  std::vector<DropoutSpan> dropouts;
  double min_gap = 8.0;

  // Defaults for n surfaces: amplitude 4, wavelength 64, contrasts
  // alternating 0.15 / 0.75 so neighboring boundaries have opposite polarity.
  static PhantomSpec with_surfaces(int n);

  // Throws ValidationError on inconsistent sizes or when N * min_gap >= Z.
  void validate() const;
  // Surface i is dark-to-bright when the layer below it is brighter.
  std::vector<Polarity> polarities() const;
  bool operator==(const PhantomSpec&) const = default;
};

struct Phantom {
  BScan image;
  GroundTruth truth;
  // Per-surface bound on |s_x - s_{x+1}|: ceil(2 pi A / lambda), raised to
  // the bound of any surface above it since ordering pushes surfaces down.
  std::vector<int> step_bound;
};

// Deterministic given the spec. Surfaces are sinusoids with a seeded random
// phase, pushed apart to respect min_gap and clipped to [0, Z-1]. Pixels are
// rendered with partial-volume coverage of [z - 0.5, z + 0.5], then Gaussian
// noise is added and intensities clipped to [0,1].
Phantom generate(const PhantomSpec& spec);

PhantomSpec phantom_spec_from_json(const std::string& text);
std::string to_json(const PhantomSpec& spec);

// mt19937_64 with portable uniform and Box-Muller normal draws, so phantoms
// reproduce bit-for-bit across standard libraries.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed);
  double uniform();  // [0, 1), 53-bit resolution
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ddpseg
