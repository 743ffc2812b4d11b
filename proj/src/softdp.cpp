#include "ddpseg/softdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddpseg/parallel.hpp"

namespace ddpseg {

namespace {

void check_window(std::span<const double> v, int lo, int hi) {
  if (lo > hi) throw ValidationError("empty smoothed-max window");
  if (lo < 0 || static_cast<std::size_t>(hi) >= v.size())
    throw ValidationError("smoothed-max window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "] outside vector of length " + std::to_string(v.size()));
}

}  // namespace

double logsumexp_window(std::span<const double> v, int lo, int hi, double t) {
  check_window(v, lo, hi);
  const double m = *std::max_element(v.begin() + lo, v.begin() + hi + 1);
  double sum = 0.0;
  for (int k = lo; k <= hi; ++k) sum += std::exp(t * (v[k] - m));
  return m + std::log(sum) / t;
}

double logsumexp_window(std::span<const double> v, int lo, int hi, double t, std::span<double> weights) {
  check_window(v, lo, hi);
  if (weights.size() != static_cast<std::size_t>(hi - lo + 1))
    throw DimensionError("weight buffer does not match window size");
  const double m = *std::max_element(v.begin() + lo, v.begin() + hi + 1);
  double sum = 0.0;
  for (int k = lo; k <= hi; ++k) sum += weights[k - lo] = std::exp(t * (v[k] - m));
  for (double& w : weights) w /= sum;
  return m + std::log(sum) / t;
}

double select_temperature(int max_delta, double eps) {
  if (max_delta < 1) throw ValidationError("select_temperature needs maxDelta >= 1");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ValidationError("epsilon must be positive and finite");
  return std::log(2.0 * max_delta + 1.0) / eps;
}

SmoothnessSpec spec_from_deltas(Grid2<int> deltas, double epsilon, double alpha) {
  SmoothnessSpec s;
  s.deltas = std::move(deltas);
  s.alpha = alpha;
  s.epsilon = epsilon;
  s.temperatures.resize(static_cast<std::size_t>(s.deltas.rows()));
  for (int i = 0; i < s.deltas.rows(); ++i)
    s.temperatures[i] = select_temperature(std::max(1, s.max_delta(i)), epsilon);
  s.validate();
  return s;
}

std::span<const double> DPState::window_weights(int i, int x, int z) const {
  const auto n = static_cast<std::size_t>(hi_(i, x, z) - lo_(i, x, z) + 1);
  return {weights_.data() + offset_(i, x, z), n};
}

DPState soft_forward(const CostVolume& c, const SmoothnessSpec& spec, int threads) {
  check_dimensions(c, spec);
  const int N = c.surfaces();
  const int X = c.width();
  const int Z = c.height();
  DPState s;
  s.tau_ = Grid3<double>(N, X, Z);
  s.lo_ = Grid3<int>(N, X, Z, 0);
  s.hi_ = Grid3<int>(N, X, Z, -1);
  s.offset_ = Grid3<std::size_t>(N, X, Z, 0);
  std::size_t total = 0;
  for (int i = 0; i < N; ++i)
    for (int x = 1; x < X; ++x) {
      const int d = spec.deltas(i, x - 1);
      for (int z = 0; z < Z; ++z) {
        s.lo_(i, x, z) = std::max(0, z - d);
        s.hi_(i, x, z) = std::min(Z - 1, z + d);
        s.offset_(i, x, z) = total;
        total += static_cast<std::size_t>(s.hi_(i, x, z) - s.lo_(i, x, z) + 1);
      }
    }
  s.weights_.assign(total, 0.0);
  s.final_weights_ = Grid2<double>(N, Z, 0.0);
  s.centers_ = Grid2<int>(N, X, 0);
  s.positions_ = SurfaceSet(N, X);

  parallel_for(N, threads, [&](int i) {
    const double t = spec.temperature(i);
    auto first = s.tau_.column(i, 0);
    std::copy(c.column(i, 0).begin(), c.column(i, 0).end(), first.begin());
    for (int x = 1; x < X; ++x) {
      const auto prev = s.tau_.column(i, x - 1);
      for (int z = 0; z < Z; ++z) {
        const int lo = s.lo_(i, x, z);
        const int hi = s.hi_(i, x, z);
        std::span<double> w(s.weights_.data() + s.offset_(i, x, z), static_cast<std::size_t>(hi - lo + 1));
        s.tau_(i, x, z) = c(i, x, z) + logsumexp_window(prev, lo, hi, t, w);
      }
    }
    logsumexp_window(s.tau_.column(i, X - 1), 0, Z - 1, t, s.final_weights_.row(i));
  });
  return s;
}

SurfaceSet soft_backtrack(DPState& state, const SmoothnessSpec& spec, int threads) {
  if (state.tau_.size() == 0 || state.final_weights_.rows() != state.surfaces())
    throw ValidationError("soft_backtrack needs a state produced by soft_forward");
  if (spec.surfaces() != state.surfaces() || spec.width() != state.width())
    throw DimensionError("smoothness spec does not match DP state");
  const int X = state.width();
  const int Z = state.height();
  parallel_for(state.surfaces(), threads, [&](int i) {
    double z_next = 0.0;
    const auto pf = state.final_weights_.row(i);
    for (int z = 0; z < Z; ++z) z_next += z * pf[z];
    state.positions_(i, X - 1) = z_next;
    for (int x = X - 1; x >= 1; --x) {
      const int center = std::clamp(static_cast<int>(std::lround(z_next)), 0, Z - 1);
      state.centers_(i, x) = center;
      const int lo = state.lo_(i, x, center);
      const auto w = state.window_weights(i, x, center);
      double z_prev = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) z_prev += (lo + static_cast<int>(k)) * w[k];
      state.positions_(i, x - 1) = z_prev;
      z_next = z_prev;
    }
    state.centers_(i, 0) = std::clamp(static_cast<int>(std::lround(z_next)), 0, Z - 1);
  });
  state.backtracked_ = true;
  return state.positions_;
}

DPState segment_state(const CostVolume& c, const SmoothnessSpec& spec, int threads) {
  DPState s = soft_forward(c, spec, threads);
  soft_backtrack(s, spec, threads);
  return s;
}

SurfaceSet segment(const CostVolume& c, const SmoothnessSpec& spec, int threads) {
  return segment_state(c, spec, threads).positions();
}

Grid2<int> round_positions(const SurfaceSet& s) {
  Grid2<int> out(s.surfaces(), s.width(), 0);
  for (int i = 0; i < s.surfaces(); ++i)
    for (int x = 0; x < s.width(); ++x) out(i, x) = static_cast<int>(std::lround(s(i, x)));
  return out;
}

}  // namespace ddpseg
