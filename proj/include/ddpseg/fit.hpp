#pragma once

#include <span>
#include <string>
#include <vector>

#include "ddpseg/costmodel.hpp"
#include "ddpseg/dynprog.hpp"
#include "ddpseg/evalloss.hpp"

namespace ddpseg {

// Delta(i,x) = ceil(alpha + max over tracings of |s_x - s_{x+1}|), with
// per-surface temperatures from select_temperature(max Delta, epsilon).
// Throws ValidationError on an empty list or mismatched dimensions.
SmoothnessSpec estimate_delta(std::span<const SurfaceSet> training, double alpha, double epsilon);

enum class FitPhase { Pretrain, Finetune };
std::string_view to_string(FitPhase p);

// Heuristic gain for fit initialization. Lower than the segmentation default
// so the initial softmax is not saturated and gradients reach every column.
inline constexpr double kDefaultFitGain = 5.0;

struct FitConfig {
  int pretrain_steps = 500;
  int finetune_steps = 100;
  double learning_rate = 50.0;
  // Step size for the DDP phase; negative means "same as learning_rate".
  // Zero freezes the parameters.
  double finetune_learning_rate = -1.0;
  double alpha = 1.0;
  double epsilon = 1.0;
  int max_halvings = 40;
  int threads = 1;

  void validate() const;
};

struct LossRecord {
  int step = 0;
  FitPhase phase = FitPhase::Pretrain;
  double mce = 0.0;
  double l1 = 0.0;
  double total = 0.0;
  double learning_rate = 0.0;
};

struct FitResult {
  SurfaceSet surfaces;   // final DDP segmentation
  MuEstimate mu;         // soft-argmax at the final parameters
  LogitVolume logits;    // final parameters
  SurfaceSet pretrain_mu;  // soft-argmax after phase 1
  std::vector<LossRecord> history;
};

// Thrown when a loss or gradient becomes non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Gradient descent on per-column logits. Phase 1 minimizes L_mCE + L1 with
// z = mu; phase 2 replaces z by the DDP segmentation of -(z - mu)^2 and
// chains the L1 gradient back through it. A step that raises the loss is
// retried at half the step size; the halved size is kept. History holds the
// loss before the first step (step 0) and after every step of each phase.
FitResult fit_surfaces(const LogitVolume& init, const GroundTruth& gt, const SmoothnessSpec& spec,
                       const FitConfig& cfg);

FitResult fit_surfaces(const BScan& img, std::span<const Polarity> polarity, double gain, const GroundTruth& gt,
                       const SmoothnessSpec& spec, const FitConfig& cfg);

// CSV with header `step,phase,L_mCE,L1,total`.
std::string history_csv(std::span<const LossRecord> history);

}  // namespace ddpseg
