// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each criterion also has a wall-clock budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ddpseg/costmodel.hpp"
#include "ddpseg/dynprog.hpp"
#include "ddpseg/evalloss.hpp"
#include "ddpseg/fit.hpp"
#include "ddpseg/gradients.hpp"
#include "ddpseg/phantom.hpp"
#include "ddpseg/softdp.hpp"

using namespace ddpseg;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

CostVolume integer_costs(std::mt19937_64& rng, int n, int x, int z, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  CostVolume c(n, x, z);
  for (double& v : c.values()) v = d(rng);
  return c;
}

// 1. Hard DP against exhaustive enumeration.
Outcome oracle_equivalence() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> dn(1, 2), dx(1, 6), dz(1, 5), dd(0, 2);
  int total_mismatch = 0, path_mismatch = 0, infeasible = 0;
  const int instances = 2000;
  for (int k = 0; k < instances; ++k) {
    const int N = dn(rng), X = dx(rng), Z = dz(rng);
    const auto c = integer_costs(rng, N, X, Z, -3, 3);
    SmoothnessSpec spec = SmoothnessSpec::uniform(N, X, 0, 1.0);
    // Half the instances use one delta everywhere, half vary it per column pair.
    const int uniform = dd(rng);
    for (int& d : spec.deltas.values()) d = k % 2 ? dd(rng) : uniform;
    const auto hard = hard_dp_solve(c, spec);
    const auto brute = brute_force_oracle(c, spec);
    if (hard.total != brute.total) ++total_mismatch;
    if (hard.path != brute.path) ++path_mismatch;
    if (!satisfies_smoothness(hard.path, spec)) ++infeasible;
  }
  return {total_mismatch == 0 && path_mismatch == 0 && infeasible == 0,
          fmt("%d instances, total mismatches %d, path mismatches %d, infeasible %d", instances, total_mismatch,
              path_mismatch, infeasible)};
}

// 2. Smoothed-max bound on random windows.
Outcome smoothed_max_bound() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<int> len(1, 40), dd(1, 6);
  std::uniform_real_distribution<double> logt(-3.0, 3.0), val(-100.0, 100.0);
  const int windows = 20000;
  int violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < windows; ++k) {
    const int L = len(rng), D = dd(rng);
    std::vector<double> v(static_cast<std::size_t>(L));
    for (double& e : v) e = val(rng);
    std::uniform_int_distribution<int> center(0, L - 1);
    const int z = center(rng);
    const int lo = std::max(0, z - D), hi = std::min(L - 1, z + D);
    const double t = std::pow(10.0, logt(rng));
    double m = v[lo];
    for (int q = lo + 1; q <= hi; ++q) m = std::max(m, v[q]);
    const double phi = logsumexp_window(v, lo, hi, t);
    const double upper = m + std::log(2.0 * D + 1.0) / t;
    if (phi < m - 1e-12 || phi > upper + 1e-12) ++violations;
    worst = std::max({worst, m - phi, phi - upper});
  }
  return {violations == 0, fmt("%d windows, violations %d, worst excess %.3g", windows, violations, worst)};
}

// Best and second-best path totals over all feasible paths of one surface.
std::pair<double, double> two_best(const CostVolume& c, const SmoothnessSpec& spec) {
  const int X = c.width(), Z = c.height();
  double best = -1e300, second = -1e300;
  std::vector<int> path(static_cast<std::size_t>(X));
  std::function<void(int, double)> walk = [&](int x, double acc) {
    if (x == X) {
      if (acc > best) {
        second = best;
        best = acc;
      } else if (acc > second) {
        second = acc;
      }
      return;
    }
    for (int z = 0; z < Z; ++z) {
      if (x > 0 && std::abs(z - path[x - 1]) > spec.deltas(0, x - 1)) continue;
      path[x] = z;
      walk(x + 1, acc + c(0, x, z));
    }
  };
  walk(0, 0.0);
  return {best, second};
}

// 3. Sharp soft DP reproduces a unique hard optimum.
Outcome soft_to_hard() {
  std::mt19937_64 rng(1003);
  std::uniform_int_distribution<int> dd(1, 2);
  const int X = 5, Z = 7;
  const double eps = 1e-4;
  int accepted = 0, drawn = 0, path_ok = 0, bound_ok = 0;
  double worst_gap = 0.0;
  while (accepted < 100) {
    ++drawn;
    const auto c = integer_costs(rng, 1, X, Z, -3, 3);
    const auto spec = spec_from_deltas(Grid2<int>(1, X - 1, dd(rng)), eps);
    const auto [best, second] = two_best(c, spec);
    if (best - second < 1.0) continue;
    ++accepted;
    const auto hard = hard_dp_solve(c, spec);
    const auto state = segment_state(c, spec);
    if (round_positions(state.positions()) == hard.path) ++path_ok;
    double soft = state.tau()(0, X - 1, 0);
    for (int z = 1; z < Z; ++z) soft = std::max(soft, state.tau()(0, X - 1, z));
    const double gap = soft - hard.total[0];
    worst_gap = std::max(worst_gap, gap);
    if (gap >= 0.0 && gap <= (X - 1) * eps) ++bound_ok;
  }
  return {path_ok == accepted && bound_ok == accepted,
          fmt("%d instances (%d drawn), rounded paths equal %d/%d, value bound %d/%d, worst gap %.3g <= %.3g", accepted,
              drawn, path_ok, accepted, bound_ok, accepted, worst_gap, (X - 1) * eps)};
}

// 4. Analytic backward against central differences.
Outcome gradient_correctness() {
  std::mt19937_64 rng(1004);
  std::uniform_int_distribution<int> dn(1, 2), dx(1, 8), dz(1, 10), dd(1, 2), dt(0, 2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double temps[] = {1.0, 5.0, 20.0};
  double worst = 0.0;
  std::size_t compared = 0;
  for (int k = 0; k < 50; ++k) {
    const int N = dn(rng), X = dx(rng), Z = dz(rng);
    CostVolume c(N, X, Z);
    for (double& v : c.values()) v = u(rng);
    SmoothnessSpec spec = SmoothnessSpec::uniform(N, X, 0, 1.0);
    for (int& d : spec.deltas.values()) d = dd(rng);
    for (double& t : spec.temperatures) t = temps[dt(rng)];
    const auto r = finite_diff_check(c, spec, 1e-6);
    worst = std::max(worst, r.max_rel_err);
    compared += r.compared;
  }
  return {worst <= 1e-5, fmt("50 instances, %zu Jacobian entries, max relative error %.3g <= 1e-5", compared, worst)};
}

// 5. Smoothness of soft and hard outputs on phantoms.
Outcome constraint_satisfaction() {
  const double eps_choices[] = {1e-2, 1e-1, 1.0};
  int soft_bad = 0, hard_bad = 0;
  for (int k = 0; k < 100; ++k) {
    auto ps = PhantomSpec::with_surfaces(1 + k % 3);
    ps.seed = 5000 + static_cast<std::uint64_t>(k);
    ps.noise_sigma = 0.05 * (k % 4);
    ps.amplitude.assign(static_cast<std::size_t>(ps.surfaces), 2.0 + k % 5);
    if (k % 2) ps.dropouts = {{k % ps.surfaces, 30, 45}};
    const auto ph = generate(ps);
    const auto mu =
        surface_mu(softmax_z(heuristic_logits(gradient_channels(ph.image), ps.polarities())));
    const auto c = cost_from_mu(mu, ps.height);
    const std::vector<SurfaceSet> train{ph.truth.positions()};
    const auto spec = estimate_delta(train, 1.0, eps_choices[k % 3]);
    if (!satisfies_smoothness(round_positions(segment(c, spec)), spec, 1)) ++soft_bad;
    if (!satisfies_smoothness(hard_dp_solve(c, spec).path, spec, 0)) ++hard_bad;
  }
  return {soft_bad == 0 && hard_bad == 0,
          fmt("100 phantoms, soft violations of delta+1: %d, hard violations of delta: %d", soft_bad, hard_bad)};
}

// 6. DDP against the per-column argmax on phantoms with weak boundaries.
Outcome weak_boundary_benefit() {
  const int N = 2;
  std::vector<SurfaceSet> train;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto ps = PhantomSpec::with_surfaces(N);
    ps.seed = 1000 + s;
    train.push_back(generate(ps).truth.positions());
  }
  const auto spec = estimate_delta(train, 1.0, 1e-2);
  int not_better = 0;
  double span_ddp = 0.0, span_base = 0.0, all_ddp = 0.0, all_base = 0.0;
  const int phantoms = 20, span = 10;
  for (int k = 0; k < phantoms; ++k) {
    auto ps = PhantomSpec::with_surfaces(N);
    ps.seed = 1 + static_cast<std::uint64_t>(k);
    ps.noise_sigma = 0.05;
    const int surf = k % N, start = 10 + (k * 37) % 100;
    ps.dropouts = {{surf, start, start + span}};
    const auto ph = generate(ps);
    const auto logits = heuristic_logits(gradient_channels(ph.image), ps.polarities());
    const auto ddp = segment(cost_from_mu(surface_mu(softmax_z(logits)), ps.height), spec);
    const auto base = column_argmax(logits);
    const double md = metrics(ddp, ph.truth, 1.0).mean.masd_px;
    const double mb = metrics(base, ph.truth, 1.0).mean.masd_px;
    if (!(md < mb)) ++not_better;
    all_ddp += md / phantoms;
    all_base += mb / phantoms;
    for (int x = start; x < start + span; ++x) {
      const double s = ph.truth.positions()(surf, x);
      span_ddp += std::abs(ddp(surf, x) - s) / (span * phantoms);
      span_base += std::abs(base(surf, x) - s) / (span * phantoms);
    }
  }
  const bool pass = not_better == 0 && span_base >= 2.0 * span_ddp;
  return {pass, fmt("%d phantoms, DDP not better on %d; mean MASD %.3f vs %.3f px; dropout spans %.3f vs %.3f px "
                    "(ratio %.2f >= 2)",
                    phantoms, not_better, all_ddp, all_base, span_ddp, span_base, span_base / span_ddp)};
}

// 7. Pretrain then fine-tune on a noise-free phantom.
Outcome end_to_end_fit() {
  auto ps = PhantomSpec::with_surfaces(2);
  ps.seed = 7;
  const auto ph = generate(ps);
  FitConfig cfg;
  const std::vector<SurfaceSet> train{ph.truth.positions()};
  const auto spec = estimate_delta(train, cfg.alpha, cfg.epsilon);
  const auto r = fit_surfaces(ph.image, ps.polarities(), kDefaultFitGain, ph.truth, spec, cfg);
  double phase1 = std::numeric_limits<double>::infinity();
  int phase1_steps = 0, phase2_steps = 0;
  for (const auto& h : r.history) {
    if (h.phase == FitPhase::Pretrain) {
      phase1 = h.l1;
      phase1_steps = h.step;
    } else {
      phase2_steps = h.step;
    }
  }
  const double final_l1 = loss_l1(r.surfaces, ph.truth);
  const bool pass = phase1_steps <= 500 && phase2_steps == 100 && phase1 <= 0.1 && final_l1 <= phase1 + 0.05;
  return {pass, fmt("phase-1 L1 %.4f px after %d steps (<= 0.1); final L1 %.4f px after %d phase-2 steps (<= %.4f)",
                    phase1, phase1_steps, final_l1, phase2_steps, phase1 + 0.05)};
}

// 8. Loss and metric spot values.
Outcome spot_values() {
  SurfaceSet s(1, 2, 1.0);
  const double mce = loss_mce(ProbabilityVolume(1, 2, 3, 0.5), GroundTruth(s, 3));
  SurfaceSet pred(1, 2), gt(1, 2);
  pred(0, 0) = 3;
  pred(0, 1) = 5;
  gt(0, 0) = 4;
  gt(0, 1) = 4;
  const double l1 = loss_l1(pred, GroundTruth(gt, 8));
  SurfaceSet d(1, 2), zero(1, 2, 0.0);
  d(0, 0) = 1;
  d(0, 1) = 3;
  const double masd = metrics(d, zero, 3.24).mean.masd_um;
  const bool pass = std::abs(mce - std::log(2.0)) <= 1e-9 && l1 == 1.0 && masd == 6.48;
  return {pass, fmt("mCE %.12f (ln 2 +/- 1e-9), L1 %.17g (== 1), MASD %.17g um (== 6.48)", mce, l1, masd)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "oracle equivalence", 10, oracle_equivalence},
      {2, "smoothed-max bound", 5, smoothed_max_bound},
      {3, "soft to hard convergence", 10, soft_to_hard},
      {4, "gradient correctness", 60, gradient_correctness},
      {5, "constraint satisfaction", 30, constraint_satisfaction},
      {6, "weak-boundary benefit", 120, weak_boundary_benefit},
      {7, "end-to-end fit", 120, end_to_end_fit},
      {8, "loss spot values", 1, spot_values},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.budget_s;
    if (!pass) ++failed;
    std::printf("criterion %d %s: %s | %s | %.2f s (budget %.0f s)\n", c.id, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
