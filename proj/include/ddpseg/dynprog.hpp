#pragma once

#include <vector>

#include "ddpseg/costmodel.hpp"
#include "ddpseg/grid.hpp"

namespace ddpseg {

// Smoothness limits for every surface and column pair, plus the smoothed-max
// temperature (one per surface) and the parameters it was derived from.
//
// deltas(i, x) bounds |z_x - z_{x+1}| for surface i, so the grid is
// N x (X-1).
struct SmoothnessSpec {
  Grid2<int> deltas;
  std::vector<double> temperatures;
  double alpha = 1.0;
  double epsilon = 1e-2;

  int surfaces() const { return deltas.rows(); }
  int width() const { return deltas.cols() + 1; }
  int max_delta(int surface) const;
  double temperature(int surface) const { return temperatures.at(static_cast<std::size_t>(surface)); }

  // Throws ValidationError on negative deltas, non-positive temperatures,
  // alpha or epsilon, or a temperature list of the wrong length.
  void validate() const;

  // Same delta for every surface and column pair, same temperature for every
  // surface.
  static SmoothnessSpec uniform(int surfaces, int width, int delta, double temperature);
};

struct HardSolution {
  Grid2<int> path;            // N x X integer rows
  std::vector<double> total;  // per-surface objective, summed left to right
};

// Sum of c_i(x, path(i,x)) over x, accumulated in increasing x.
double path_total(const CostVolume& c, int surface, std::span<const int> path);

// Throws DimensionError unless spec and c agree on N and X.
void check_dimensions(const CostVolume& c, const SmoothnessSpec& spec);

// Exact constrained max-sum DP with argmax backtracking. Windows are clipped
// to [0, Z); every argmax (including the last column) breaks ties toward the
// smallest z.
HardSolution hard_dp_solve(const CostVolume& c, const SmoothnessSpec& spec, int threads = 1);

inline constexpr double kBruteForceLimit = 1e7;

// Enumerates every feasible path. Among optimal paths it returns the one that
// is smallest when compared from the last column backwards, which is the
// path produced by smallest-z backtracking. Throws ValidationError when
// Z^X exceeds kBruteForceLimit.
HardSolution brute_force_oracle(const CostVolume& c, const SmoothnessSpec& spec);

// True when |path(i,x) - path(i,x+1)| <= deltas(i,x) + slack everywhere.
bool satisfies_smoothness(const Grid2<int>& path, const SmoothnessSpec& spec, int slack = 0);

}  // namespace ddpseg
