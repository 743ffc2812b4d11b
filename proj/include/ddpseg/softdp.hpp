#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ddpseg/costmodel.hpp"
#include "ddpseg/dynprog.hpp"
#include "ddpseg/grid.hpp"

namespace ddpseg {

// (1/t) log sum_{k=lo..hi} exp(t v[k]), evaluated around the window maximum.
// Throws ValidationError on an empty or out-of-range window.
double logsumexp_window(std::span<const double> v, int lo, int hi, double t);

// As above, also writing the window softmax (the gradient of the smoothed
// max) into `weights`, which must have hi - lo + 1 entries.
double logsumexp_window(std::span<const double> v, int lo, int hi, double t, std::span<double> weights);

// Smallest t with log(2 maxDelta + 1) / t <= eps.
double select_temperature(int max_delta, double eps);

// Builds a spec whose per-surface temperature comes from select_temperature
// with that surface's largest delta (at least 1).
SmoothnessSpec spec_from_deltas(Grid2<int> deltas, double epsilon, double alpha = 1.0);

// Everything the backward pass needs: the forward values, the softmax over
// every window, the final-column softmax, and (after backtracking) the
// rounded window centers and the fractional positions.
class DPState {
 public:
  DPState() = default;

  int surfaces() const { return tau_.surfaces(); }
  int width() const { return tau_.width(); }
  int height() const { return tau_.height(); }

  const Grid3<double>& tau() const { return tau_; }
  // Window [lo, hi] of column x-1 feeding tau(i, x, z); x >= 1.
  int window_lo(int i, int x, int z) const { return lo_(i, x, z); }
  int window_hi(int i, int x, int z) const { return hi_(i, x, z); }
  std::span<const double> window_weights(int i, int x, int z) const;
  std::span<const double> final_weights(int i) const { return final_weights_.row(i); }

  bool backtracked() const { return backtracked_; }
  const Grid2<int>& centers() const { return centers_; }
  const SurfaceSet& positions() const { return positions_; }

 private:
  friend DPState soft_forward(const CostVolume&, const SmoothnessSpec&, int);
  friend SurfaceSet soft_backtrack(DPState&, const SmoothnessSpec&, int);

  Grid3<double> tau_;
  Grid3<int> lo_;
  Grid3<int> hi_;
  Grid3<std::size_t> offset_;
  std::vector<double> weights_;
  Grid2<double> final_weights_;
  Grid2<int> centers_;
  SurfaceSet positions_;
  bool backtracked_ = false;
};

// tau(0,z) = c(0,z); tau(x,z) = c(x,z) + smoothed max of tau(x-1, .) over the
// clipped window z +/- delta.
DPState soft_forward(const CostVolume& c, const SmoothnessSpec& spec, int threads = 1);

// Final column: softmax expectation over all rows. Then for x = X-1..1 the
// window of column x-1 is centered at round(z_x) (clamped) and z_{x-1} is the
// softmax expectation over that window. Records centers and positions.
SurfaceSet soft_backtrack(DPState& state, const SmoothnessSpec& spec, int threads = 1);

// soft_forward followed by soft_backtrack.
DPState segment_state(const CostVolume& c, const SmoothnessSpec& spec, int threads = 1);
SurfaceSet segment(const CostVolume& c, const SmoothnessSpec& spec, int threads = 1);

// Rounded positions, for constraint checks.
Grid2<int> round_positions(const SurfaceSet& s);

}  // namespace ddpseg
