#include "ddpseg/dynprog.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddpseg/parallel.hpp"

namespace ddpseg {

int SmoothnessSpec::max_delta(int surface) const {
  int m = 0;
  for (int d : deltas.row(surface)) m = std::max(m, d);
  return m;
}

void SmoothnessSpec::validate() const {
  if (deltas.rows() < 1) throw ValidationError("smoothness spec has no surfaces");
  for (int d : deltas.values())
    if (d < 0) throw ValidationError("smoothness delta must be nonnegative");
  if (static_cast<int>(temperatures.size()) != deltas.rows())
    throw ValidationError("need one temperature per surface");
  for (double t : temperatures)
    if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("temperature must be positive and finite");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
}

SmoothnessSpec SmoothnessSpec::uniform(int surfaces, int width, int delta, double temperature) {
  if (surfaces < 1 || width < 1) throw ValidationError("spec dimensions must be positive");
  SmoothnessSpec s;
  s.deltas = Grid2<int>(surfaces, width - 1, delta);
  s.temperatures.assign(static_cast<std::size_t>(surfaces), temperature);
  s.validate();
  return s;
}

double path_total(const CostVolume& c, int surface, std::span<const int> path) {
  double total = 0.0;
  for (int x = 0; x < c.width(); ++x) total += c(surface, x, path[x]);
  return total;
}

void check_dimensions(const CostVolume& c, const SmoothnessSpec& spec) {
  if (c.surfaces() < 1 || c.width() < 1 || c.height() < 1) throw DimensionError("empty cost volume");
  if (spec.surfaces() != c.surfaces() || spec.width() != c.width())
    throw DimensionError("smoothness spec is " + std::to_string(spec.surfaces()) + "x" +
                         std::to_string(spec.width()) + " but cost volume is " + std::to_string(c.surfaces()) +
                         "x" + std::to_string(c.width()));
  spec.validate();
}

namespace {

void solve_surface(const CostVolume& c, const SmoothnessSpec& spec, int i, HardSolution& out) {
  const int X = c.width();
  const int Z = c.height();
  std::vector<double> prev(c.column(i, 0).begin(), c.column(i, 0).end());
  std::vector<double> cur(static_cast<std::size_t>(Z));
  Grid2<int> back(X, Z, 0);
  for (int x = 1; x < X; ++x) {
    const int d = spec.deltas(i, x - 1);
    for (int z = 0; z < Z; ++z) {
      const int lo = std::max(0, z - d);
      const int hi = std::min(Z - 1, z + d);
      int best = lo;
      for (int k = lo + 1; k <= hi; ++k)
        if (prev[k] > prev[best]) best = k;
      back(x, z) = best;
      cur[z] = c(i, x, z) + prev[best];
    }
    std::swap(prev, cur);
  }
  auto path = out.path.row(i);
  path[X - 1] = static_cast<int>(std::max_element(prev.begin(), prev.end()) - prev.begin());
  for (int x = X - 1; x > 0; --x) path[x - 1] = back(x, path[x]);
  out.total[i] = path_total(c, i, path);
}

}  // namespace

HardSolution hard_dp_solve(const CostVolume& c, const SmoothnessSpec& spec, int threads) {
  check_dimensions(c, spec);
  HardSolution out{Grid2<int>(c.surfaces(), c.width(), 0), std::vector<double>(c.surfaces(), 0.0)};
  parallel_for(c.surfaces(), threads, [&](int i) { solve_surface(c, spec, i, out); });
  return out;
}

HardSolution brute_force_oracle(const CostVolume& c, const SmoothnessSpec& spec) {
  check_dimensions(c, spec);
  const int X = c.width();
  const int Z = c.height();
  if (X * std::log10(static_cast<double>(Z)) > std::log10(kBruteForceLimit) + 1e-12)
    throw ValidationError("brute force limited to Z^X <= 1e7, got Z=" + std::to_string(Z) +
                          ", X=" + std::to_string(X));
  HardSolution out{Grid2<int>(c.surfaces(), X, 0), std::vector<double>(c.surfaces(), 0.0)};
  for (int i = 0; i < c.surfaces(); ++i) {
    std::vector<int> path(static_cast<std::size_t>(X), 0);
    std::vector<int> best;
    double best_total = 0.0;
    // Compares from the last column backwards.
    auto reverse_less = [](const std::vector<int>& a, const std::vector<int>& b) {
      return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
    };
    auto visit = [&](auto& self, int x) -> void {
      if (x == X) {
        const double total = path_total(c, i, path);
        if (best.empty() || total > best_total || (total == best_total && reverse_less(path, best))) {
          best = path;
          best_total = total;
        }
        return;
      }
      int lo = 0;
      int hi = Z - 1;
      if (x > 0) {
        lo = std::max(0, path[x - 1] - spec.deltas(i, x - 1));
        hi = std::min(Z - 1, path[x - 1] + spec.deltas(i, x - 1));
      }
      for (int z = lo; z <= hi; ++z) {
        path[x] = z;
        self(self, x + 1);
      }
    };
    visit(visit, 0);
    std::copy(best.begin(), best.end(), out.path.row(i).begin());
    out.total[i] = best_total;
  }
  return out;
}

bool satisfies_smoothness(const Grid2<int>& path, const SmoothnessSpec& spec, int slack) {
  for (int i = 0; i < path.rows(); ++i)
    for (int x = 0; x + 1 < path.cols(); ++x)
      if (std::abs(path(i, x) - path(i, x + 1)) > spec.deltas(i, x) + slack) return false;
  return true;
}

}  // namespace ddpseg
