#include "ddpseg/fit.hpp"

#include <algorithm>
#include <cmath>

#include "ddpseg/gradients.hpp"
#include "ddpseg/softdp.hpp"

namespace ddpseg {

SmoothnessSpec estimate_delta(std::span<const SurfaceSet> training, double alpha, double epsilon) {
  if (training.empty()) throw ValidationError("estimate_delta needs at least one tracing");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  const int n = training.front().surfaces();
  const int width = training.front().width();
  if (n < 1 || width < 1) throw ValidationError("empty training tracing");
  Grid2<double> max_step(n, width - 1, 0.0);
  for (const auto& s : training) {
    if (s.surfaces() != n || s.width() != width)
      throw ValidationError("training tracings disagree in dimensions");
    for (int i = 0; i < n; ++i)
      for (int x = 0; x + 1 < width; ++x) max_step(i, x) = std::max(max_step(i, x), std::abs(s(i, x) - s(i, x + 1)));
  }
  Grid2<int> deltas(n, width - 1, 0);
  for (int i = 0; i < n; ++i)
    for (int x = 0; x + 1 < width; ++x) deltas(i, x) = static_cast<int>(std::ceil(alpha + max_step(i, x)));
  return spec_from_deltas(std::move(deltas), epsilon, alpha);
}

std::string_view to_string(FitPhase p) { return p == FitPhase::Pretrain ? "pretrain" : "finetune"; }

void FitConfig::validate() const {
  if (pretrain_steps < 0 || finetune_steps < 0) throw ValidationError("step counts must be nonnegative");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning rate must be positive");
  if (!std::isfinite(finetune_learning_rate)) throw ValidationError("finetune learning rate must be finite");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (max_halvings < 0) throw ValidationError("max halvings must be nonnegative");
}

namespace {

struct Evaluation {
  LossBreakdown loss;
  LogitVolume grad;
};

class Objective {
 public:
  Objective(const GroundTruth& gt, const SmoothnessSpec& spec, int threads)
      : gt_(gt), spec_(spec), threads_(threads) {}

  LossBreakdown loss(const LogitVolume& logits, FitPhase phase) const {
    const auto p = softmax_z(logits);
    const auto mu = surface_mu(p);
    LossBreakdown l;
    l.mce = loss_mce(p, gt_);
    l.l1 = loss_l1(phase == FitPhase::Pretrain ? mu : segment(cost_from_mu(mu, gt_.height()), spec_, threads_), gt_);
    return l;
  }

  Evaluation evaluate(const LogitVolume& logits, FitPhase phase) const {
    const auto p = softmax_z(logits);
    const auto mu = surface_mu(p);
    Evaluation e;
    e.loss.mce = loss_mce(p, gt_);
    SurfaceSet d_mu;
    if (phase == FitPhase::Pretrain) {
      e.loss.l1 = loss_l1(mu, gt_);
      d_mu = loss_l1_grad(mu, gt_);
    } else {
      const DPState state = segment_state(cost_from_mu(mu, gt_.height()), spec_, threads_);
      e.loss.l1 = loss_l1(state.positions(), gt_);
      d_mu = backward(state, spec_, loss_l1_grad(state.positions(), gt_), mu, threads_).d_mu;
    }
    auto d_p = loss_mce_grad(p, gt_);
    accumulate_d_p_from_mu(d_mu, d_p);
    e.grad = d_logits_from_p(p, d_p);
    return e;
  }

 private:
  const GroundTruth& gt_;
  const SmoothnessSpec& spec_;
  int threads_;
};

void guard(const LossBreakdown& l, FitPhase phase, int step) {
  if (!std::isfinite(l.total()))
    throw DivergenceError("loss became non-finite in " + std::string(to_string(phase)) + " step " +
                          std::to_string(step));
}

void run_phase(const Objective& obj, LogitVolume& theta, FitPhase phase, int steps, double lr, int max_halvings,
               std::vector<LossRecord>& history) {
  LossBreakdown current = obj.loss(theta, phase);
  guard(current, phase, 0);
  history.push_back({0, phase, current.mce, current.l1, current.total(), lr});
  for (int step = 1; step <= steps; ++step) {
    const Evaluation e = obj.evaluate(theta, phase);
    for (double g : e.grad.values())
      if (!std::isfinite(g)) throw DivergenceError("gradient became non-finite in step " + std::to_string(step));
    double step_lr = lr;
    for (int attempt = 0; attempt <= max_halvings; ++attempt) {
      LogitVolume trial = theta;
      auto tv = trial.values();
      const auto gv = e.grad.values();
      for (std::size_t k = 0; k < tv.size(); ++k) tv[k] -= step_lr * gv[k];
      const LossBreakdown next = obj.loss(trial, phase);
      if (std::isfinite(next.total()) && next.total() <= current.total()) {
        theta = std::move(trial);
        current = next;
        break;
      }
      step_lr *= 0.5;
    }
    guard(current, phase, step);
    history.push_back({step, phase, current.mce, current.l1, current.total(), step_lr});
  }
}

}  // namespace

FitResult fit_surfaces(const LogitVolume& init, const GroundTruth& gt, const SmoothnessSpec& spec,
                       const FitConfig& cfg) {
  cfg.validate();
  if (init.surfaces() != gt.surfaces() || init.width() != gt.width() || init.height() != gt.height())
    throw DimensionError("initial logits and ground truth disagree in shape");
  if (spec.surfaces() != init.surfaces() || spec.width() != init.width())
    throw DimensionError("smoothness spec does not match the logits");
  spec.validate();
  for (double v : init.values())
    if (!std::isfinite(v)) throw ValidationError("initial logits must be finite");

  const Objective obj(gt, spec, cfg.threads);
  FitResult r;
  LogitVolume theta = init;
  run_phase(obj, theta, FitPhase::Pretrain, cfg.pretrain_steps, cfg.learning_rate, cfg.max_halvings, r.history);
  r.pretrain_mu = surface_mu(softmax_z(theta));
  const double lr2 = cfg.finetune_learning_rate < 0.0 ? cfg.learning_rate : cfg.finetune_learning_rate;
  run_phase(obj, theta, FitPhase::Finetune, cfg.finetune_steps, lr2, cfg.max_halvings, r.history);
  r.mu = surface_mu(softmax_z(theta));
  r.surfaces = segment(cost_from_mu(r.mu, gt.height()), spec, cfg.threads);
  r.logits = std::move(theta);
  return r;
}

FitResult fit_surfaces(const BScan& img, std::span<const Polarity> polarity, double gain, const GroundTruth& gt,
                       const SmoothnessSpec& spec, const FitConfig& cfg) {
  return fit_surfaces(heuristic_logits(gradient_channels(img), polarity, gain), gt, spec, cfg);
}

std::string history_csv(std::span<const LossRecord> history) {
  std::string out = "step,phase,L_mCE,L1,total\n";
  for (const auto& h : history)
    out += std::to_string(h.step) + "," + std::string(to_string(h.phase)) + "," + format_double(h.mce) + "," +
           format_double(h.l1) + "," + format_double(h.total) + "\n";
  return out;
}

}  // namespace ddpseg
