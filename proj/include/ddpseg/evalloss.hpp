#pragma once

#include <string>
#include <vector>

#include "ddpseg/costmodel.hpp"
#include "ddpseg/imageio.hpp"

namespace ddpseg {

// Real-valued tracings s_x^(i) plus the image height, from which the
// per-pixel indicator g (1 at z = round(s)) is derived.
class GroundTruth {
 public:
  GroundTruth() = default;
  // Throws ValidationError if any position is outside [0, height-1].
  GroundTruth(SurfaceSet positions, int height);

  int surfaces() const { return positions_.surfaces(); }
  int width() const { return positions_.width(); }
  int height() const { return height_; }
  const SurfaceSet& positions() const { return positions_; }
  int onehot_row(int i, int x) const;
  Grid3<double> onehot() const;

 private:
  SurfaceSet positions_;
  int height_ = 0;
};

inline constexpr double kProbabilityClamp = 1e-8;

// Binary cross entropy summed over every pixel and surface, divided by N*Z*X.
// p is clamped into [1e-8, 1 - 1e-8] before taking logs.
double loss_mce(const ProbabilityVolume& p, const GroundTruth& g);
// d loss_mce / d p, zero where the clamp is active.
ProbabilityVolume loss_mce_grad(const ProbabilityVolume& p, const GroundTruth& g);

// (1 / (N X)) sum |z - s|.
double loss_l1(const SurfaceSet& pred, const GroundTruth& gt);
// Subgradient sign(z - s) / (N X), with sign(0) = 0.
SurfaceSet loss_l1_grad(const SurfaceSet& pred, const GroundTruth& gt);

struct LossBreakdown {
  double mce = 0.0;
  double l1 = 0.0;
  double total() const { return mce + l1; }
};

// L = L_mCE + L_1. With pretrain = true the L1 term uses mu = surface_mu(p)
// and `pred` is ignored.
LossBreakdown total_loss(const ProbabilityVolume& p, const GroundTruth& g, const SurfaceSet& pred,
                         bool pretrain = false);

inline constexpr double kDukeAxialResolutionUm = 3.24;

struct SurfaceMetrics {
  double masd_px = 0.0;
  double hd_px = 0.0;
  double hd95_px = 0.0;
  double masd_um = 0.0;
  double hd_um = 0.0;
  double hd95_um = 0.0;
};

struct MetricReport {
  double um_per_pixel = kDukeAxialResolutionUm;
  std::vector<SurfaceMetrics> surfaces;
  SurfaceMetrics mean;  // average of the per-surface values
};

// Linear interpolation between order statistics at rank q (n - 1).
double percentile(std::vector<double> values, double q);

// Column-wise absolute distances d_x = |z_x - s_x| per surface, pooled over
// all columns: MASD = mean, HD = max, HD95 = 95th percentile.
MetricReport metrics(const SurfaceSet& pred, const GroundTruth& gt, double um_per_pixel = kDukeAxialResolutionUm);
MetricReport metrics(const SurfaceSet& pred, const SurfaceSet& gt, double um_per_pixel = kDukeAxialResolutionUm);

std::string to_json(const MetricReport& r);

}  // namespace ddpseg
