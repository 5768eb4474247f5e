#pragma once

// Synthetic click records for overcomplete tomography.
//
// Setting letters act on the signal outputs before the detectors:
//   X: HWP at pi/8 (|+> -> h, |-> -> v)
//   Y: QWP at pi/4 (|+i> -> h, |-i> -> v)
//   Z: nothing
// so the h click of a signal output always reports the +1 eigenvalue.
//
// Click distributions are resolved exactly for photon configurations that
// reach every detected output; only those can yield an accepted six-fold
// coincidence. The remaining probability is "unresolved": sampled triggers
// land there without emitting clicks and count as wrong-multiplicity.

#include "hghz/circuit.hpp"
#include "hghz/counts_io.hpp"
#include "hghz/detection.hpp"
#include "hghz/error.hpp"
#include "hghz/interference.hpp"
#include "hghz/linalg.hpp"
#include "hghz/source.hpp"
#include "hghz/tomography.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace hghz {

inline Circuit setting_circuit(Circuit c, const DetectorConfig& cfg, const std::string& setting) {
  if (!valid_setting(setting) || setting.size() != cfg.signal_outputs.size())
    fail(ErrorCode::argument, "setting '" + setting + "' does not match the signal outputs");
  for (std::size_t k = 0; k < setting.size(); ++k) {
    const int m = cfg.signal_outputs[k];
    if (setting[k] == 'X') c.elements.push_back(Element::hwp(m, pi / 8));
    if (setting[k] == 'Y') c.elements.push_back(Element::qwp(m, pi / 4));
  }
  return c;
}

struct SettingDistribution {
  std::string setting;
  std::vector<std::pair<ClickPattern, double>> patterns;  // sorted by pattern
  double unresolved = 0.0;
};

/// Exact click distribution of one setting, restricted to configurations
/// with a photon in every detected output.
inline SettingDistribution setting_distribution(const MixedEnsemble& ensemble, const Circuit& circuit,
                                                const DetectorConfig& cfg, const std::string& setting,
                                                int max_singletons = -1) {
  cfg.validate(circuit.n_spatial());
  const CMatrix u = compile(setting_circuit(circuit, cfg, setting));
  std::vector<std::vector<int>> required;
  for (int o : cfg.signal_outputs) required.push_back({2 * o, 2 * o + 1});
  for (int o : cfg.herald_outputs) required.push_back({2 * o, 2 * o + 1});

  std::map<std::vector<int>, std::shared_ptr<CoreCache>> caches;
  std::map<Occupation, std::vector<std::pair<ClickPattern, double>>> clicks_of;
  // dense accumulator over all click patterns (2^18 for the reference layout)
  const bool dense = cfg.detector_count() <= 22;
  std::vector<double> dense_acc(dense ? std::size_t{1} << cfg.detector_count() : 0);
  std::map<ClickPattern, double> sparse_acc;
  double resolved = 0.0;
  for (const auto& branch : ensemble.branches) {
    if (max_singletons >= 0 && detail::isolated_count(branch) > max_singletons) continue;
    auto& cache = caches[detail::core_key(branch)];
    if (!cache) cache = std::make_shared<CoreCache>();
    const Interference eng(branch.photons, u, cache);
    for (const auto& [occ, p] : eng.populations(required)) {
      auto found = clicks_of.find(occ);
      if (found == clicks_of.end()) {
        const auto clicks = click_distribution({{occ, 1.0}}, cfg);
        found = clicks_of.emplace(occ, std::vector<std::pair<ClickPattern, double>>(clicks.begin(), clicks.end())).first;
      }
      const double bp = branch.probability * p;
      for (const auto& [pat, w] : found->second) {
        if (dense)
          dense_acc[pat.bits] += bp * w;
        else
          sparse_acc[pat] += bp * w;
        resolved += bp * w;
      }
    }
  }
  SettingDistribution d;
  d.setting = setting;
  if (dense) {
    for (std::size_t bits = 0; bits < dense_acc.size(); ++bits)
      if (dense_acc[bits] > 0) d.patterns.emplace_back(ClickPattern{static_cast<std::uint32_t>(bits)}, dense_acc[bits]);
  } else {
    d.patterns.assign(sparse_acc.begin(), sparse_acc.end());
  }
  d.unresolved = std::max(0.0, ensemble.total_probability() - resolved);
  return d;
}

inline std::vector<SettingDistribution> setting_distributions(const MixedEnsemble& ensemble, const Circuit& circuit,
                                                              const DetectorConfig& cfg, int max_singletons = -1,
                                                              int threads = 1) {
  const auto settings = pauli_settings();
  std::vector<SettingDistribution> out(settings.size());
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(settings.size())));
  auto work = [&](int w) {
    for (std::size_t s = w; s < settings.size(); s += workers)
      out[s] = setting_distribution(ensemble, circuit, cfg, settings[s], max_singletons);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return out;
}

struct SamplerOptions {
  double trigger_rate = 0.0;          // Hz of source events entering the circuit
  double duration_per_setting = 0.0;  // seconds
  std::uint64_t seed = 1;

  std::uint64_t triggers_per_setting() const {
    if (!(trigger_rate >= 0.0) || !(duration_per_setting >= 0.0))
      fail(ErrorCode::argument, "sampler: trigger_rate and duration must be >= 0");
    return static_cast<std::uint64_t>(std::llround(trigger_rate * duration_per_setting));
  }
};

inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct SampleSummary {
  std::uint64_t triggers = 0;
  std::uint64_t unresolved = 0;
  std::uint64_t records = 0;
};

/// Draws triggers setting by setting; trigger ids are consecutive across
/// settings. Each setting uses its own generator seeded from (seed, index).
inline SampleSummary sample_clicks(const std::vector<SettingDistribution>& dists, const SamplerOptions& opt,
                                   const std::function<void(const ClickRecord&)>& sink) {
  const std::uint64_t n = opt.triggers_per_setting();
  SampleSummary summary;
  std::uint64_t trigger = 0;
  for (std::size_t s = 0; s < dists.size(); ++s) {
    const auto& d = dists[s];
    std::vector<double> cumulative;
    cumulative.reserve(d.patterns.size());
    double run = 0.0;
    for (const auto& [pat, p] : d.patterns) cumulative.push_back(run += p);
    const double total = run + d.unresolved;
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(seq);
    ClickRecord rec;
    rec.setting = d.setting;
    for (std::uint64_t k = 0; k < n; ++k, ++trigger) {
      const double x = unit_uniform(rng) * total;
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
      if (it == cumulative.end()) {
        ++summary.unresolved;
        continue;
      }
      const ClickPattern pat = d.patterns[it - cumulative.begin()].first;
      rec.trigger_id = trigger;
      for (std::uint32_t bits = pat.bits; bits; bits &= bits - 1) {
        rec.detector_id = std::countr_zero(bits);
        sink(rec);
        ++summary.records;
      }
    }
  }
  summary.triggers = trigger;
  return summary;
}

/// Expected accepted counts of one herald group for the given triggers per
/// setting, in the layout produced by tomography_data().
inline TomographyData expected_tomography_data(const std::vector<SettingDistribution>& dists, const PatternFilter& filter,
                                               const std::string& group, double triggers_per_setting,
                                               double duration = 0.0) {
  int g = -1;
  for (std::size_t k = 0; k < filter.rule.groups.size(); ++k)
    if (filter.rule.groups[k].name == group) g = static_cast<int>(k);
  if (g < 0) fail(ErrorCode::argument, "no herald group named '" + group + "'");
  TomographyData d;
  d.duration = duration;
  for (const auto& s : pauli_settings()) d.settings[s].fill(0.0);
  for (const auto& dist : dists) {
    const double total = dist.unresolved + [&] {
      double t = 0;
      for (const auto& [pat, p] : dist.patterns) t += p;
      return t;
    }();
    for (const auto& [pat, p] : dist.patterns) {
      const auto c = filter.classify(pat);
      if (c.kind != TriggerClass::accepted || c.group != g) continue;
      d.settings[dist.setting][std::stoi(c.signal_outcome, nullptr, 2)] += triggers_per_setting * p / total;
    }
  }
  return d;
}

}  // namespace hghz
