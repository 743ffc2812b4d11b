#include "ddpseg/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "json.hpp"

#include "ddpseg/parallel.hpp"

namespace ddpseg {

CostGrad backward(const DPState& state, const SmoothnessSpec& spec, const SurfaceSet& d_z, int threads) {
  if (!state.backtracked()) throw ValidationError("backward needs a backtracked DP state");
  if (spec.surfaces() != state.surfaces() || spec.width() != state.width())
    throw DimensionError("smoothness spec does not match DP state");
  if (d_z.surfaces() != state.surfaces() || d_z.width() != state.width())
    throw DimensionError("output cotangent does not match DP state");
  const int N = state.surfaces();
  const int X = state.width();
  const int Z = state.height();
  CostGrad g{CostVolume(N, X, Z, 0.0), SurfaceSet()};
  const auto& z = state.positions();

  parallel_for(N, threads, [&](int i) {
    const double t = spec.temperature(i);
    Grid2<double> d_tau(X, Z, 0.0);

    // Each output is a softmax expectation over one window of tau, so its
    // cotangent lands directly on that window: d E / d v_k = t w_k (k - E).
    const auto pf = state.final_weights(i);
    for (int k = 0; k < Z; ++k) d_tau(X - 1, k) += d_z(i, X - 1) * t * pf[k] * (k - z(i, X - 1));
    for (int x = X - 1; x >= 1; --x) {
      const int center = state.centers()(i, x);
      const int lo = state.window_lo(i, x, center);
      const auto w = state.window_weights(i, x, center);
      const double e = z(i, x - 1);
      for (std::size_t k = 0; k < w.size(); ++k) {
        const int row = lo + static_cast<int>(k);
        d_tau(x - 1, row) += d_z(i, x - 1) * t * w[k] * (row - e);
      }
    }

    // Reverse sweep through tau(x,z) = c(x,z) + smax(tau(x-1, window)); the
    // partial of the smoothed max is the cached window softmax.
    for (int x = X - 1; x >= 1; --x)
      for (int row = 0; row < Z; ++row) {
        const double up = d_tau(x, row);
        g.d_cost(i, x, row) = up;
        if (up == 0.0) continue;
        const int lo = state.window_lo(i, x, row);
        const auto w = state.window_weights(i, x, row);
        for (std::size_t k = 0; k < w.size(); ++k) d_tau(x - 1, lo + static_cast<int>(k)) += up * w[k];
      }
    for (int row = 0; row < Z; ++row) g.d_cost(i, 0, row) = d_tau(0, row);
  });
  return g;
}

CostGrad backward(const DPState& state, const SmoothnessSpec& spec, const SurfaceSet& d_z, const MuEstimate& mu,
                  int threads) {
  CostGrad g = backward(state, spec, d_z, threads);
  g.d_mu = d_mu_from_cost(g.d_cost, mu);
  return g;
}

namespace {

using Quad = boost::multiprecision::cpp_bin_float_quad;

// Soft positions of surface i recomputed in quad precision, with cost entry
// (i, px, pz) shifted by `bump` and every window center held at the value
// recorded in `base`. Double rounding noise would otherwise swamp small
// Jacobian entries at h = 1e-6.
std::vector<Quad> reference_positions(const CostVolume& c, const SmoothnessSpec& spec, const DPState& base, int i,
                                      int px, int pz, const Quad& bump) {
  const int X = c.width();
  const int Z = c.height();
  const Quad t = spec.temperature(i);
  auto cost = [&](int x, int z) {
    Quad v = c(i, x, z);
    if (x == px && z == pz) v += bump;
    return v;
  };
  std::vector<std::vector<Quad>> tau(static_cast<std::size_t>(X), std::vector<Quad>(static_cast<std::size_t>(Z)));
  for (int z = 0; z < Z; ++z) tau[0][z] = cost(0, z);
  for (int x = 1; x < X; ++x) {
    const int d = spec.deltas(i, x - 1);
    for (int z = 0; z < Z; ++z) {
      const int lo = std::max(0, z - d);
      const int hi = std::min(Z - 1, z + d);
      Quad m = tau[x - 1][lo];
      for (int k = lo + 1; k <= hi; ++k) m = std::max(m, tau[x - 1][k]);
      Quad s = 0;
      for (int k = lo; k <= hi; ++k) s += exp(t * (tau[x - 1][k] - m));
      tau[x][z] = cost(x, z) + m + log(s) / t;
    }
  }
  auto expectation = [&](const std::vector<Quad>& v, int lo, int hi) {
    Quad m = v[lo];
    for (int k = lo + 1; k <= hi; ++k) m = std::max(m, v[k]);
    Quad num = 0, den = 0;
    for (int k = lo; k <= hi; ++k) {
      const Quad w = exp(t * (v[k] - m));
      num += k * w;
      den += w;
    }
    return Quad(num / den);
  };
  std::vector<Quad> z(static_cast<std::size_t>(X));
  z[X - 1] = expectation(tau[X - 1], 0, Z - 1);
  for (int x = X - 1; x >= 1; --x) {
    const int center = base.centers()(i, x);
    const int d = spec.deltas(i, x - 1);
    z[x - 1] = expectation(tau[x - 1], std::max(0, center - d), std::min(Z - 1, center + d));
  }
  return z;
}

}  // namespace

GradCheckReport finite_diff_check(const CostVolume& c, const SmoothnessSpec& spec, double h) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
  const int N = c.surfaces();
  const int X = c.width();
  const int Z = c.height();
  const DPState base = segment_state(c, spec);

  // Analytic Jacobian rows: one backward pass per output position.
  std::vector<CostVolume> analytic;
  analytic.reserve(static_cast<std::size_t>(N) * X);
  for (int i = 0; i < N; ++i)
    for (int x = 0; x < X; ++x) {
      SurfaceSet e(N, X, 0.0);
      e(i, x) = 1.0;
      analytic.push_back(backward(base, spec, e).d_cost);
    }

  GradCheckReport r;
  const Quad step = h;
  for (int i = 0; i < N; ++i)
    for (int xc = 0; xc < X; ++xc)
      for (int zc = 0; zc < Z; ++zc) {
        const auto plus = reference_positions(c, spec, base, i, xc, zc, step);
        const auto minus = reference_positions(c, spec, base, i, xc, zc, -step);
        // Surfaces are independent, so only outputs of surface i can move.
        for (int x = 0; x < X; ++x) {
          const double numeric = static_cast<double>((plus[x] - minus[x]) / (2 * step));
          const double a = analytic[static_cast<std::size_t>(i) * X + x](i, xc, zc);
          const double abs_err = std::abs(a - numeric);
          r.max_abs_err = std::max(r.max_abs_err, abs_err);
          ++r.compared;
          const double scale = std::max(std::abs(a), std::abs(numeric));
          if (scale < kGradCheckFloor) continue;
          const double rel = abs_err / scale;
          if (rel > r.max_rel_err) {
            r.max_rel_err = rel;
            r.worst_cost_index = {i, xc, zc};
            r.worst_output_column = x;
            r.worst_analytic = a;
            r.worst_numeric = numeric;
          }
        }
      }
  return r;
}

std::string to_json(const GradCheckReport& r) {
  nlohmann::ordered_json j;
  j["max_abs_err"] = r.max_abs_err;
  j["max_rel_err"] = r.max_rel_err;
  j["worst_index"] = {{"surface", r.worst_cost_index[0]},
                      {"x", r.worst_cost_index[1]},
                      {"z", r.worst_cost_index[2]},
                      {"output_x", r.worst_output_column}};
  j["worst_analytic"] = r.worst_analytic;
  j["worst_numeric"] = r.worst_numeric;
  j["compared"] = r.compared;
  return j.dump(2);
}

}  // namespace ddpseg
