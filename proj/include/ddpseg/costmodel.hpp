#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddpseg/grid.hpp"
#include "ddpseg/imageio.hpp"

namespace ddpseg {

struct LogitTag {};
struct ProbabilityTag {};
struct CostTag {};

// N x X x Z per-pixel surface logits.
using LogitVolume = TaggedVolume<LogitTag>;
// Column-wise softmax of logits; each (i,x) column sums to 1.
using ProbabilityVolume = TaggedVolume<ProbabilityTag>;
// On-surface costs c_i(x,z), maximized along a surface.
using CostVolume = TaggedVolume<CostTag>;
// Soft-argmax surface estimates mu_x^(i).
using MuEstimate = SurfaceSet;

enum class Polarity { DarkToBright, BrightToDark };

Polarity parse_polarity(std::string_view name);
std::string_view to_string(Polarity p);

// Max-subtracted softmax over z for each (i,x) column.
ProbabilityVolume softmax_z(const LogitVolume& logits);

// mu = sum_z z * p.
MuEstimate surface_mu(const ProbabilityVolume& p);

// c_i(x,z) = -(z - mu)^2. No clamping of mu.
CostVolume cost_from_mu(const MuEstimate& mu, int height);

// Vector-Jacobian products for the chain logits -> p -> mu -> cost.
//
// d_mu_from_cost: dMu = sum_z dC(x,z) * 2 (z - mu).
// d_p_from_mu:    dP(x,z) += z * dMu(x).
// d_logits_from_p: softmax VJP, dL = p * (dP - <p, dP>).
SurfaceSet d_mu_from_cost(const CostVolume& d_cost, const MuEstimate& mu);
void accumulate_d_p_from_mu(const SurfaceSet& d_mu, ProbabilityVolume& d_p);
LogitVolume d_logits_from_p(const ProbabilityVolume& p, const ProbabilityVolume& d_p);

inline constexpr double kDefaultHeuristicGain = 100.0;

// Stand-in for a learned network: logits = gain * (+/-) grad90, the sign
// chosen so the expected edge polarity (moving down in z) scores high.
// `polarity` must hold one entry per surface.
LogitVolume heuristic_logits(const ChannelStack& stack, std::span<const Polarity> polarity,
                             double gain = kDefaultHeuristicGain);

// Per-column argmax (smallest z on ties). Baseline without smoothness.
SurfaceSet column_argmax(const Grid3<double>& v);

// Volume CSV: three header lines holding N, X and Z, then N*X lines of Z
// comma-separated values, ordered by surface then column.
std::string serialize_volume(const Grid3<double>& v);
Grid3<double> parse_volume(std::string_view text);
void write_volume(const Grid3<double>& v, const std::filesystem::path& path);
Grid3<double> read_volume(const std::filesystem::path& path);

}  // namespace ddpseg
