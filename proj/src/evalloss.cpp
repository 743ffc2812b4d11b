#include "ddpseg/evalloss.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace ddpseg {

GroundTruth::GroundTruth(SurfaceSet positions, int height) : positions_(std::move(positions)), height_(height) {
  if (height_ < 1) throw ValidationError("ground truth height must be positive");
  for (int i = 0; i < positions_.surfaces(); ++i)
    for (int x = 0; x < positions_.width(); ++x) {
      const double s = positions_(i, x);
      if (!std::isfinite(s) || s < 0.0 || s > height_ - 1)
        throw ValidationError("ground truth surface " + std::to_string(i) + " at x=" + std::to_string(x) +
                              " outside [0, Z-1]");
    }
}

int GroundTruth::onehot_row(int i, int x) const {
  return std::clamp(static_cast<int>(std::lround(positions_(i, x))), 0, height_ - 1);
}

Grid3<double> GroundTruth::onehot() const {
  Grid3<double> g(surfaces(), width(), height_, 0.0);
  for (int i = 0; i < surfaces(); ++i)
    for (int x = 0; x < width(); ++x) g(i, x, onehot_row(i, x)) = 1.0;
  return g;
}

namespace {

void require_match(const Grid3<double>& p, const GroundTruth& g) {
  if (p.surfaces() != g.surfaces() || p.width() != g.width() || p.height() != g.height())
    throw DimensionError("probability volume and ground truth disagree in shape");
}

void require_match(const SurfaceSet& a, const SurfaceSet& b) {
  if (!a.same_shape(b)) throw DimensionError("prediction and ground truth disagree in shape");
}

}  // namespace

double loss_mce(const ProbabilityVolume& p, const GroundTruth& g) {
  require_match(p, g);
  double sum = 0.0;
  for (int i = 0; i < p.surfaces(); ++i)
    for (int x = 0; x < p.width(); ++x) {
      const int target = g.onehot_row(i, x);
      for (int z = 0; z < p.height(); ++z) {
        const double q = std::clamp(p(i, x, z), kProbabilityClamp, 1.0 - kProbabilityClamp);
        sum -= z == target ? std::log(q) : std::log1p(-q);
      }
    }
  return sum / (static_cast<double>(p.surfaces()) * p.height() * p.width());
}

ProbabilityVolume loss_mce_grad(const ProbabilityVolume& p, const GroundTruth& g) {
  require_match(p, g);
  ProbabilityVolume d(p.surfaces(), p.width(), p.height(), 0.0);
  const double scale = 1.0 / (static_cast<double>(p.surfaces()) * p.height() * p.width());
  for (int i = 0; i < p.surfaces(); ++i)
    for (int x = 0; x < p.width(); ++x) {
      const int target = g.onehot_row(i, x);
      for (int z = 0; z < p.height(); ++z) {
        const double q = p(i, x, z);
        if (q < kProbabilityClamp || q > 1.0 - kProbabilityClamp) continue;
        d(i, x, z) = z == target ? -scale / q : scale / (1.0 - q);
      }
    }
  return d;
}

double loss_l1(const SurfaceSet& pred, const GroundTruth& gt) {
  require_match(pred, gt.positions());
  double sum = 0.0;
  for (int i = 0; i < pred.surfaces(); ++i)
    for (int x = 0; x < pred.width(); ++x) sum += std::abs(pred(i, x) - gt.positions()(i, x));
  return sum / (static_cast<double>(pred.surfaces()) * pred.width());
}

SurfaceSet loss_l1_grad(const SurfaceSet& pred, const GroundTruth& gt) {
  require_match(pred, gt.positions());
  SurfaceSet d(pred.surfaces(), pred.width());
  const double scale = 1.0 / (static_cast<double>(pred.surfaces()) * pred.width());
  for (int i = 0; i < pred.surfaces(); ++i)
    for (int x = 0; x < pred.width(); ++x) {
      const double diff = pred(i, x) - gt.positions()(i, x);
      d(i, x) = diff > 0.0 ? scale : diff < 0.0 ? -scale : 0.0;
    }
  return d;
}

LossBreakdown total_loss(const ProbabilityVolume& p, const GroundTruth& g, const SurfaceSet& pred, bool pretrain) {
  LossBreakdown l;
  l.mce = loss_mce(p, g);
  l.l1 = pretrain ? loss_l1(surface_mu(p), g) : loss_l1(pred, g);
  return l;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

MetricReport metrics(const SurfaceSet& pred, const SurfaceSet& gt, double um_per_pixel) {
  require_match(pred, gt);
  if (!(um_per_pixel > 0.0)) throw ValidationError("resolution must be positive");
  MetricReport r;
  r.um_per_pixel = um_per_pixel;
  const int n = pred.surfaces();
  for (int i = 0; i < n; ++i) {
    std::vector<double> d(static_cast<std::size_t>(pred.width()));
    double sum = 0.0;
    for (int x = 0; x < pred.width(); ++x) sum += d[x] = std::abs(pred(i, x) - gt(i, x));
    SurfaceMetrics m;
    m.masd_px = sum / static_cast<double>(d.size());
    m.hd_px = *std::max_element(d.begin(), d.end());
    m.hd95_px = percentile(std::move(d), 0.95);
    m.masd_um = m.masd_px * um_per_pixel;
    m.hd_um = m.hd_px * um_per_pixel;
    m.hd95_um = m.hd95_px * um_per_pixel;
    r.surfaces.push_back(m);
  }
  for (const auto& m : r.surfaces) {
    r.mean.masd_px += m.masd_px / n;
    r.mean.hd_px += m.hd_px / n;
    r.mean.hd95_px += m.hd95_px / n;
    r.mean.masd_um += m.masd_um / n;
    r.mean.hd_um += m.hd_um / n;
    r.mean.hd95_um += m.hd95_um / n;
  }
  return r;
}

MetricReport metrics(const SurfaceSet& pred, const GroundTruth& gt, double um_per_pixel) {
  return metrics(pred, gt.positions(), um_per_pixel);
}

namespace {

nlohmann::ordered_json metric_json(const SurfaceMetrics& m) {
  nlohmann::ordered_json j;
  j["masd_px"] = m.masd_px;
  j["masd_um"] = m.masd_um;
  j["hd_px"] = m.hd_px;
  j["hd_um"] = m.hd_um;
  j["hd95_px"] = m.hd95_px;
  j["hd95_um"] = m.hd95_um;
  return j;
}

}  // namespace

std::string to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["um_per_pixel"] = r.um_per_pixel;
  j["surfaces"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.surfaces.size(); ++i) {
    auto s = metric_json(r.surfaces[i]);
    s["surface"] = i;
    j["surfaces"].push_back(std::move(s));
  }
  j["mean"] = metric_json(r.mean);
  return j.dump(2) + "\n";
}

}  // namespace ddpseg
