#pragma once

#include <array>
#include <string>

#include "ddpseg/costmodel.hpp"
#include "ddpseg/softdp.hpp"

namespace ddpseg {

// Cotangents of a scalar loss with respect to the cost volume and, when the
// costs came from cost_from_mu, with respect to mu.
struct CostGrad {
  CostVolume d_cost;
  SurfaceSet d_mu;  // empty unless mu was supplied
};

// Reverse-mode derivative of the soft-backtracked positions with respect to
// every cost entry, given output cotangents d_z (N x X). Window centers are
// treated as constants. Throws ValidationError if the state was never
// backtracked or does not match the spec.
CostGrad backward(const DPState& state, const SmoothnessSpec& spec, const SurfaceSet& d_z, int threads = 1);

// Same, then chains through c = -(z - mu)^2 to fill d_mu.
CostGrad backward(const DPState& state, const SmoothnessSpec& spec, const SurfaceSet& d_z, const MuEstimate& mu,
                  int threads = 1);

inline constexpr double kDefaultFiniteDiffStep = 1e-6;
inline constexpr double kGradCheckFloor = 1e-9;

struct GradCheckReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  // (surface, column, row) of the cost entry and the output column of the
  // worst relative error.
  std::array<int, 3> worst_cost_index{0, 0, 0};
  int worst_output_column = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t compared = 0;
};

// Compares the full Jacobian dz_x / dc(i,x',z) from backward against central
// differences with step h. Entries where both magnitudes are below
// kGradCheckFloor are excluded from the relative error. Reports, never
// asserts.
GradCheckReport finite_diff_check(const CostVolume& c, const SmoothnessSpec& spec,
                                  double h = kDefaultFiniteDiffStep);

std::string to_json(const GradCheckReport& r);

}  // namespace ddpseg
