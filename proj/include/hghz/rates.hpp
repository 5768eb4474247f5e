#pragma once

// Rate accounting for the demultiplexed source and the heralded-state budget.

#include "hghz/error.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace hghz {

struct RateFactor {
  std::string label;
  double efficiency = 1.0;
  int multiplicity = 1;
};

struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct RateBudget {
  double base_rate = 0.0;  // Hz
  std::vector<RateFactor> factors;
  Rational success_probability;

  void validate() const {
    if (!(base_rate >= 0.0) || !std::isfinite(base_rate)) fail(ErrorCode::validation, "budget: base_rate must be >= 0");
    for (const auto& f : factors) {
      if (!(f.efficiency > 0.0 && f.efficiency <= 1.0))
        fail(ErrorCode::validation, "budget: efficiency of '" + f.label + "' must lie in (0, 1]");
      if (f.multiplicity < 0) fail(ErrorCode::validation, "budget: multiplicity of '" + f.label + "' must be >= 0");
    }
    const auto& p = success_probability;
    if (p.den <= 0 || p.num <= 0 || p.num > p.den)
      fail(ErrorCode::validation, "budget: success_probability must lie in (0, 1]");
  }

  static RateBudget paper() {
    RateBudget b;
    b.base_rate = 547.0;
    b.factors = {{"interferometer", 0.8, 6}, {"ppnr_setup", 0.85, 3}, {"fibre_mating", 0.85, 6}};
    b.success_probability = {1, 32};
    return b;
  }
};

inline double expected_rate(const RateBudget& budget) {
  budget.validate();
  double r = budget.base_rate;
  for (const auto& f : budget.factors) r *= std::pow(f.efficiency, f.multiplicity);
  return r * budget.success_probability.value();
}

struct DemuxStage {
  int switches = 1;
  double modulation_hz = 0.0;
  double transmission = 1.0;
};

// Binary tree of switches: stage k holds 2^k switches, each halving the
// modulation frequency of its parent.
struct DemuxTree {
  std::vector<DemuxStage> stages;
  double source_rate = 0.0;      // single photons into the tree, Hz
  double repetition_rate = 0.0;  // pump pulses, Hz

  int outputs() const { return 1 << static_cast<int>(stages.size()); }

  double transmission() const {
    double t = 1.0;
    for (const auto& s : stages) t *= s.transmission;
    return t;
  }

  void validate() const {
    if (stages.empty()) fail(ErrorCode::validation, "demux: at least one stage required");
    for (std::size_t k = 0; k < stages.size(); ++k) {
      if (stages[k].switches != (1 << k))
        fail(ErrorCode::validation, "demux: stage " + std::to_string(k) + " must hold " + std::to_string(1 << k) + " switches");
      if (!(stages[k].transmission > 0.0 && stages[k].transmission <= 1.0))
        fail(ErrorCode::validation, "demux: stage transmission must lie in (0, 1]");
      if (!(stages[k].modulation_hz > 0.0)) fail(ErrorCode::validation, "demux: modulation frequency must be > 0");
    }
    if (!(repetition_rate > 0.0)) fail(ErrorCode::validation, "demux: repetition_rate must be > 0");
    if (outputs() != 8) fail(ErrorCode::validation, "demux: tree must have 8 outputs");
  }

  // 1-2-4 switches at 40/20/10 MHz behind an 80 MHz pump.
  static DemuxTree reference() {
    DemuxTree t;
    t.stages = {{1, 40e6, 1.0}, {2, 20e6, 1.0}, {4, 10e6, 1.0}};
    t.source_rate = 19.5e6;
    t.repetition_rate = 80e6;
    return t;
  }
};

/// R_n = (repetition_rate / 8) p^n with p = per_photon_efficiency times the
/// tree transmission: one n-fold event per 8-pulse frame, photons lost
/// independently.
inline double nfold_rate(const DemuxTree& tree, double per_photon_efficiency, int n) {
  tree.validate();
  if (n < 1 || n > tree.outputs()) fail(ErrorCode::argument, "nfold_rate: n must lie in 1..8, got " + std::to_string(n));
  if (!(per_photon_efficiency > 0.0 && per_photon_efficiency <= 1.0))
    fail(ErrorCode::argument, "nfold_rate: per-photon efficiency must lie in (0, 1]");
  const double p = per_photon_efficiency * tree.transmission();
  return tree.repetition_rate / tree.outputs() * std::pow(p, n);
}

struct RateAnchor {
  int n = 0;
  double rate = 0.0;  // Hz
};

struct EfficiencyFit {
  double efficiency = 0.0;  // per photon, before tree transmission
  std::vector<double> predicted;
  std::vector<double> residuals;  // measured - predicted, Hz
};

enum class FitMode {
  ratio,     // p from R_a / R_b; absolute scale ignored
  absolute,  // p from the first anchor and the nominal frame rate
};

inline EfficiencyFit fit_efficiency(const DemuxTree& tree, const std::vector<RateAnchor>& anchors, FitMode mode) {
  tree.validate();
  for (const auto& a : anchors)
    if (a.n < 1 || a.n > tree.outputs() || !(a.rate > 0.0)) fail(ErrorCode::argument, "fit: anchors need 1 <= n <= 8 and rate > 0");
  double p = 0.0;
  if (mode == FitMode::ratio) {
    if (anchors.size() != 2 || anchors[0].n == anchors[1].n)
      fail(ErrorCode::argument, "fit: ratio mode needs two anchors with distinct n");
    p = std::pow(anchors[1].rate / anchors[0].rate, 1.0 / (anchors[1].n - anchors[0].n));
  } else {
    if (anchors.empty()) fail(ErrorCode::argument, "fit: absolute mode needs an anchor");
    const double frame = tree.repetition_rate / tree.outputs();
    p = std::pow(anchors[0].rate / frame, 1.0 / anchors[0].n);
  }
  EfficiencyFit fit;
  fit.efficiency = p / tree.transmission();
  if (fit.efficiency > 1.0) fail(ErrorCode::model, "fit: anchors imply a per-photon efficiency above 1");
  for (const auto& a : anchors) {
    fit.predicted.push_back(nfold_rate(tree, fit.efficiency, a.n));
    fit.residuals.push_back(a.rate - fit.predicted.back());
  }
  return fit;
}

}  // namespace hghz
