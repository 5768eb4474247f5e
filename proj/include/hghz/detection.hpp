#pragma once

// Threshold detectors, pseudo-number resolution (PPNR) by a balanced split
// onto two detectors, herald rules and heralded signal states.
//
// Detector ids: every signal output contributes <o>h, <o>v (one detector per
// polarization); every herald output contributes <o>h_a, <o>h_b, <o>v_a,
// <o>v_b with PPNR, or <o>h, <o>v without. Signal detectors come first.

#include "hghz/circuit.hpp"
#include "hghz/error.hpp"
#include "hghz/fock.hpp"
#include "hghz/interference.hpp"
#include "hghz/linalg.hpp"
#include "hghz/source.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hghz {

/// Probability that a balanced split of n photons onto two ideal threshold
/// detectors makes exactly one of them click.
inline double ppnr_acceptance(int n) {
  if (n < 0) fail(ErrorCode::argument, "ppnr_acceptance: negative photon number");
  if (n == 0) return 0.0;
  return std::ldexp(1.0, 1 - n);
}

struct Detector {
  std::string name;
  int spatial = 0;
  Polarization polarization = Polarization::h;
  int split = -1;  // -1: unsplit, 0: PPNR arm a, 1: PPNR arm b
  bool herald = false;
  double efficiency = 1.0;
};

struct ClickPattern {
  std::uint32_t bits = 0;

  bool clicked(int detector) const { return (bits >> detector) & 1u; }
  void set(int detector) { bits |= 1u << detector; }
  int count() const { return std::popcount(bits); }

  friend auto operator<=>(const ClickPattern&, const ClickPattern&) = default;
};

struct DetectorConfig {
  std::vector<int> signal_outputs;
  std::vector<int> herald_outputs;
  bool ppnr = true;
  double signal_efficiency = 1.0;
  double herald_efficiency = 1.0;
  std::vector<double> detector_efficiency;  // optional per-detector override, indexed by id
  std::vector<std::string> labels;          // spatial-mode names used for detector names

  static DetectorConfig reference(double herald_eff = 1.0, double signal_eff = 1.0) {
    DetectorConfig c;
    c.signal_outputs = {0, 1, 2};
    c.herald_outputs = {3, 4, 5};
    c.herald_efficiency = herald_eff;
    c.signal_efficiency = signal_eff;
    c.labels = {"o1", "o2", "o3", "o4", "o5", "o6"};
    return c;
  }

  int detectors_per_channel(bool herald) const { return herald && ppnr ? 2 : 1; }

  int detector_count() const {
    return 2 * static_cast<int>(signal_outputs.size()) + 2 * detectors_per_channel(true) * static_cast<int>(herald_outputs.size());
  }

  std::string label(int spatial) const {
    return spatial < static_cast<int>(labels.size()) ? labels[spatial] : "m" + std::to_string(spatial);
  }

  /// First detector id of channel (output, polarization); PPNR arm b is id + 1.
  int channel_detector(int spatial, Polarization p) const {
    int id = 0;
    for (int s : signal_outputs) {
      if (s == spatial) return id + static_cast<int>(p);
      id += 2;
    }
    const int per = detectors_per_channel(true);
    for (int h : herald_outputs) {
      if (h == spatial) return id + per * static_cast<int>(p);
      id += 2 * per;
    }
    return -1;
  }

  std::vector<Detector> detectors() const {
    std::vector<Detector> out;
    for (int s : signal_outputs)
      for (auto p : {Polarization::h, Polarization::v})
        out.push_back({label(s) + polarization_char(p), s, p, -1, false, signal_efficiency});
    for (int h : herald_outputs)
      for (auto p : {Polarization::h, Polarization::v}) {
        if (ppnr) {
          out.push_back({label(h) + polarization_char(p) + "_a", h, p, 0, true, herald_efficiency});
          out.push_back({label(h) + polarization_char(p) + "_b", h, p, 1, true, herald_efficiency});
        } else {
          out.push_back({label(h) + polarization_char(p), h, p, -1, true, herald_efficiency});
        }
      }
    if (!detector_efficiency.empty())
      for (std::size_t i = 0; i < out.size(); ++i) out[i].efficiency = detector_efficiency[i];
    return out;
  }

  void validate(int n_spatial) const {
    std::set<int> seen;
    for (int s : signal_outputs) {
      if (s < 0 || s >= n_spatial) fail(ErrorCode::validation, "detectors: signal output " + std::to_string(s) + " is not a circuit mode");
      if (!seen.insert(s).second) fail(ErrorCode::validation, "detectors: output " + label(s) + " listed twice");
    }
    for (int h : herald_outputs) {
      if (h < 0 || h >= n_spatial) fail(ErrorCode::validation, "detectors: herald output " + std::to_string(h) + " is not a circuit mode");
      if (!seen.insert(h).second) fail(ErrorCode::validation, "detectors: heralding and signal outputs must be disjoint (" + label(h) + ")");
    }
    if (detector_count() > 32) fail(ErrorCode::validation, "detectors: at most 32 detectors supported");
    auto check = [](double e) {
      if (!(e >= 0.0 && e <= 1.0)) fail(ErrorCode::validation, "detectors: efficiency must lie in [0, 1]");
    };
    check(signal_efficiency);
    check(herald_efficiency);
    if (!detector_efficiency.empty() && static_cast<int>(detector_efficiency.size()) != detector_count())
      fail(ErrorCode::validation, "detectors: per-detector efficiency list must have one entry per detector");
    for (double e : detector_efficiency) check(e);
  }
};

/// Click outcomes of one polarization channel holding k photons, as
/// (detector bitmask relative to the channel's first detector, probability).
/// Two detectors model a balanced PPNR split.
inline std::vector<std::pair<std::uint32_t, double>> channel_outcomes(int k, const std::vector<double>& eff) {
  if (k == 0) return {{0u, 1.0}};
  if (eff.size() == 1) {
    const double none = std::pow(1.0 - eff[0], k);
    return {{0u, none}, {1u, 1.0 - none}};
  }
  const double ea = eff[0] / 2, eb = eff[1] / 2;
  const double none = std::pow(1.0 - ea - eb, k);
  const double only_a = std::pow(1.0 - eb, k) - none;
  const double only_b = std::pow(1.0 - ea, k) - none;
  return {{0u, none}, {1u, only_a}, {2u, only_b}, {3u, std::max(0.0, 1.0 - none - only_a - only_b)}};
}

struct Channel {
  int spatial;
  Polarization polarization;
  int external;
  int first_detector;
  std::vector<double> efficiency;
  bool herald;
};

inline std::vector<Channel> channels(const DetectorConfig& cfg) {
  std::vector<Channel> out;
  const auto dets = cfg.detectors();
  for (std::size_t i = 0; i < dets.size();) {
    const auto& d = dets[i];
    Channel c{d.spatial, d.polarization, ModeLayout::external(d.spatial, d.polarization), static_cast<int>(i), {d.efficiency}, d.herald};
    ++i;
    if (d.split == 0) c.efficiency.push_back(dets[i++].efficiency);
    out.push_back(std::move(c));
  }
  return out;
}

/// Click-pattern distribution for a distribution over external occupations.
/// Modes without a detector are not observed.
inline std::map<ClickPattern, double> click_distribution(const std::map<Occupation, double>& occupations,
                                                         const DetectorConfig& cfg, bool herald_only = false) {
  const auto chans = channels(cfg);
  std::map<ClickPattern, double> out;
  std::vector<std::pair<std::uint32_t, double>> acc, next;
  for (const auto& [occ, p] : occupations) {
    acc.assign(1, {0u, p});
    for (const auto& c : chans) {
      if (herald_only && !c.herald) continue;
      const auto opts = channel_outcomes(occ[c.external], c.efficiency);
      if (opts.size() == 1) continue;
      next.clear();
      for (const auto& [bits, q] : acc)
        for (const auto& [local, w] : opts)
          if (w > 0) next.emplace_back(bits | (local << c.first_detector), q * w);
      acc.swap(next);
    }
    for (const auto& [bits, q] : acc) out[ClickPattern{bits}] += q;
  }
  return out;
}

struct HeraldGroup {
  std::string name;
  int sign = +1;  // target (|0..0> + sign |1..1>) / sqrt 2
  std::vector<std::string> patterns;
};

struct HeraldRule {
  std::vector<HeraldGroup> groups;

  /// Even number of v clicks heralds GHZ+, odd heralds GHZ-.
  static HeraldRule reference() {
    return {{{"GHZ+", +1, {"hhh", "hvv", "vhv", "vvh"}}, {"GHZ-", -1, {"hhv", "hvh", "vhh", "vvv"}}}};
  }

  void validate(int n_herald) const {
    std::set<std::string> seen;
    for (const auto& g : groups) {
      if (g.sign != 1 && g.sign != -1) fail(ErrorCode::validation, "herald_rule: group sign must be +1 or -1");
      for (const auto& p : g.patterns) {
        if (static_cast<int>(p.size()) != n_herald)
          fail(ErrorCode::validation, "herald_rule: pattern '" + p + "' needs one letter per herald output");
        for (char ch : p)
          if (ch != 'h' && ch != 'v') fail(ErrorCode::validation, "herald_rule: pattern letters must be h or v");
        if (!seen.insert(p).second) fail(ErrorCode::validation, "herald_rule: pattern '" + p + "' appears in two groups");
      }
    }
  }

  int group_of(const std::string& pattern) const {
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (const auto& p : groups[g].patterns)
        if (p == pattern) return static_cast<int>(g);
    return -1;
  }
};

/// Polarization letters of a herald click pattern, when every herald output
/// shows exactly one clicking channel that passes the PPNR one-of-two test.
/// `arms` receives 'a' or 'b' per output ('-' without PPNR).
inline std::optional<std::string> herald_letters(const ClickPattern& pattern, const DetectorConfig& cfg,
                                                 std::string* arms = nullptr) {
  std::string letters, arm;
  for (int h : cfg.herald_outputs) {
    int lit = 0;
    char letter = '?', which = '-';
    for (auto p : {Polarization::h, Polarization::v}) {
      const int d = cfg.channel_detector(h, p);
      const bool a = pattern.clicked(d);
      const bool b = cfg.ppnr && pattern.clicked(d + 1);
      if (a && b) return std::nullopt;
      if (a || b) {
        ++lit;
        letter = polarization_char(p);
        which = cfg.ppnr ? (a ? 'a' : 'b') : '-';
      }
    }
    if (lit != 1) return std::nullopt;
    letters += letter;
    arm += which;
  }
  if (arms) *arms = arm;
  return letters;
}

/// Computational-basis index of a sector configuration: qubit i is the
/// polarization (h = 0, v = 1) of signal output i, the first output being the
/// most significant bit.
inline int sector_index(const Occupation& occ, const std::vector<int>& signal_outputs) {
  int idx = 0;
  for (int s : signal_outputs) {
    const int h = occ[ModeLayout::external(s, Polarization::h)], v = occ[ModeLayout::external(s, Polarization::v)];
    if (h + v != 1) return -1;
    idx = 2 * idx + v;
  }
  return idx;
}

inline CVector ghz_vector(int qubits, int sign) {
  CVector v = CVector::Zero(1 << qubits);
  v(0) = 1.0 / std::sqrt(2.0);
  v((1 << qubits) - 1) = sign / std::sqrt(2.0);
  return v;
}

/// Label-traced signal state accompanying one herald click pattern, not
/// normalized. `sector` is the block with exactly one photon per signal output;
/// the remaining signal occupations are kept as populations only.
struct ConditionalState {
  double probability = 0.0;
  CMatrix sector;
  std::map<Occupation, double> other;

  double sector_probability() const { return sector.size() ? sector.trace().real() : 0.0; }
  double sector_weight() const { return probability > 0 ? sector_probability() / probability : 0.0; }

  CMatrix sector_state() const {
    const double p = sector_probability();
    if (!(p > 0)) fail(ErrorCode::degenerate_herald, "conditional state has no weight in the signal sector");
    return sector / p;
  }

  /// Full normalized state: sector configurations first (index order), then
  /// the other occupations on the diagonal.
  DensityOperator density(const std::vector<int>& signal_outputs, int n_external) const {
    if (!(probability > 0)) fail(ErrorCode::degenerate_herald, "conditional state has zero probability");
    DensityOperator rho;
    const int q = static_cast<int>(signal_outputs.size());
    const int dim = (1 << q) + static_cast<int>(other.size());
    rho.matrix = CMatrix::Zero(dim, dim);
    for (int i = 0; i < (1 << q); ++i) {
      Occupation occ(n_external, 0);
      for (int b = 0; b < q; ++b) {
        const int bit = (i >> (q - 1 - b)) & 1;
        occ[ModeLayout::external(signal_outputs[b], bit ? Polarization::v : Polarization::h)] = 1;
      }
      rho.basis.push_back(occ);
    }
    if (sector.size()) rho.matrix.topLeftCorner(1 << q, 1 << q) = sector;
    int i = 1 << q;
    for (const auto& [occ, p] : other) {
      rho.basis.push_back(occ);
      rho.matrix(i, i) = p;
      ++i;
    }
    rho.matrix /= probability;
    return rho;
  }
};

struct OutcomeOptions {
  int max_singletons = -1;  // drop branches with more isolated photons; -1 keeps all
  // Patterns to resolve; others are skipped. Empty keeps every pattern.
  std::function<bool(const ClickPattern&)> keep;
  // Spatial outputs that must hold a photon for any kept pattern (pruning hint).
  std::vector<int> occupied_outputs;
};

struct OutcomeDistribution {
  std::map<ClickPattern, ConditionalState> outcomes;
  double neglected_probability = 0.0;  // branches skipped by max_singletons
};

namespace detail {

inline int isolated_count(const Branch& b) {
  int k = 0;
  const int n = b.photon_number();
  for (int j = 0; j < n; ++j) {
    bool isolated = n > 1;
    for (int i = 0; i < n && isolated; ++i)
      if (i != j && std::abs(b.photons[j].internal.dot(b.photons[i].internal)) > 1e-13) isolated = false;
    k += isolated;
  }
  return k;
}

// Identifies the interfering photons of a branch; branches with equal keys
// share core results.
inline std::vector<int> core_key(const Branch& b) {
  std::vector<int> key;
  const int n = b.photon_number();
  for (int j = 0; j < n; ++j) {
    bool isolated = n > 1;
    for (int i = 0; i < n && isolated; ++i)
      if (i != j && std::abs(b.photons[j].internal.dot(b.photons[i].internal)) > 1e-13) isolated = false;
    if (!isolated) key.push_back(2 * b.photons[j].channel + b.photons[j].extra);
  }
  return key;
}

}  // namespace detail

/// Herald click patterns (signal modes unmeasured) with their probabilities
/// and conditional signal states, exact per branch of the ensemble.
inline OutcomeDistribution outcome_distribution(const MixedEnsemble& ensemble, const CMatrix& u,
                                                const DetectorConfig& cfg, const OutcomeOptions& opt = {}) {
  if (u.rows() != 2 * ensemble.n_spatial || u.cols() != u.rows())
    fail(ErrorCode::validation, "outcome_distribution: unitary does not match the ensemble's mode count");
  cfg.validate(ensemble.n_spatial);
  const int n_ext = static_cast<int>(u.rows());
  const int q = static_cast<int>(cfg.signal_outputs.size());
  std::vector<bool> is_signal(n_ext, false);
  for (int s : cfg.signal_outputs) is_signal[2 * s] = is_signal[2 * s + 1] = true;

  std::vector<std::vector<int>> required;
  for (int o : opt.occupied_outputs) required.push_back({2 * o, 2 * o + 1});

  OutcomeDistribution result;
  std::map<std::vector<int>, std::shared_ptr<CoreCache>> caches;
  std::map<Occupation, std::vector<std::pair<ClickPattern, double>>> herald_clicks;
  for (const auto& branch : ensemble.branches) {
    if (opt.max_singletons >= 0 && detail::isolated_count(branch) > opt.max_singletons) {
      result.neglected_probability += branch.probability;
      continue;
    }
    auto& cache = caches[detail::core_key(branch)];
    if (!cache) cache = std::make_shared<CoreCache>();
    const Interference eng(branch.photons, u, cache);
    const auto pops = eng.populations(required);

    // group configurations by their non-signal part
    std::map<Occupation, std::vector<std::pair<Occupation, double>>> by_rest;
    for (const auto& [occ, p] : pops) {
      Occupation rest = occ, sig(n_ext, 0);
      for (int m = 0; m < n_ext; ++m)
        if (is_signal[m]) {
          sig[m] = occ[m];
          rest[m] = 0;
        }
      by_rest[rest].emplace_back(sig, p);
    }

    for (const auto& [rest, sigs] : by_rest) {
      auto found = herald_clicks.find(rest);
      if (found == herald_clicks.end()) {
        std::vector<std::pair<ClickPattern, double>> kept;
        for (const auto& [pat, w] : click_distribution({{rest, 1.0}}, cfg, true))
          if (w > 0 && (!opt.keep || opt.keep(pat))) kept.emplace_back(pat, w);
        found = herald_clicks.emplace(rest, std::move(kept)).first;
      }
      const auto& kept = found->second;
      if (kept.empty()) continue;

      bool has_sector = false;
      for (const auto& [sig, p] : sigs) has_sector = has_sector || sector_index(sig, cfg.signal_outputs) >= 0;
      CMatrix block;
      if (has_sector) {
        block = CMatrix::Zero(1 << q, 1 << q);
        const Slots herald_slots = slots_of(rest);
        std::vector<Slots> slots(1 << q);
        for (int i = 0; i < (1 << q); ++i) {
          slots[i] = herald_slots;
          for (int b = 0; b < q; ++b)
            slots[i].push_back(2 * cfg.signal_outputs[b] + ((i >> (q - 1 - b)) & 1));
        }
        for (int i = 0; i < (1 << q); ++i)
          for (int j = i; j < (1 << q); ++j) {
            const cplx c = eng.coherence(slots[i], slots[j]);
            block(i, j) = c;
            block(j, i) = std::conj(c);
          }
        for (int i = 0; i < (1 << q); ++i) block(i, i) = block(i, i).real();
      }

      for (const auto& [pat, w] : kept) {
        auto& cs = result.outcomes[pat];
        if (cs.sector.size() == 0) cs.sector = CMatrix::Zero(1 << q, 1 << q);
        const double bw = branch.probability * w;
        for (const auto& [sig, p] : sigs) {
          cs.probability += bw * p;
          if (sector_index(sig, cfg.signal_outputs) < 0) cs.other[sig] += bw * p;
        }
        if (has_sector) cs.sector += bw * block;
      }
    }
  }
  return result;
}

struct HeraldedState {
  std::string group;
  int sign = +1;
  CMatrix rho;                       // normalized signal-sector state
  double herald_probability = 0.0;   // all accepted patterns of the group
  double in_sector_probability = 0.0;
  double sector_weight = 0.0;
  double fidelity = 0.0;             // rho against the group's GHZ target
  std::map<std::string, double> pattern_probability;  // in-sector, per herald letters
  std::map<std::string, double> pattern_fidelity;
};

struct HeraldAnalysis {
  std::vector<HeraldedState> groups;
  double neglected_probability = 0.0;
};

inline double state_fidelity(const CMatrix& rho, const CVector& target) {
  return (target.adjoint() * rho * target)(0, 0).real();
}

/// Resolves every group of the rule in one pass over the ensemble.
inline HeraldAnalysis herald_analysis(const MixedEnsemble& ensemble, const Circuit& circuit, const DetectorConfig& cfg,
                                      const HeraldRule& rule, int max_singletons = -1) {
  cfg.validate(circuit.n_spatial());
  rule.validate(static_cast<int>(cfg.herald_outputs.size()));
  const int q = static_cast<int>(cfg.signal_outputs.size());
  OutcomeOptions opt;
  opt.max_singletons = max_singletons;
  opt.occupied_outputs = cfg.herald_outputs;
  opt.keep = [&](const ClickPattern& p) {
    const auto letters = herald_letters(p, cfg);
    return letters && rule.group_of(*letters) >= 0;
  };
  const auto dist = outcome_distribution(ensemble, compile(circuit), cfg, opt);

  HeraldAnalysis out;
  out.neglected_probability = dist.neglected_probability;
  std::vector<CMatrix> sector(rule.groups.size(), CMatrix::Zero(1 << q, 1 << q));
  std::vector<std::map<std::string, CMatrix>> per_pattern(rule.groups.size());
  for (const auto& g : rule.groups) {
    HeraldedState hs;
    hs.group = g.name;
    hs.sign = g.sign;
    out.groups.push_back(hs);
  }
  for (const auto& [pat, cs] : dist.outcomes) {
    const auto letters = herald_letters(pat, cfg);
    const int g = rule.group_of(*letters);
    out.groups[g].herald_probability += cs.probability;
    sector[g] += cs.sector;
    auto& pp = per_pattern[g][*letters];
    if (pp.size() == 0) pp = CMatrix::Zero(1 << q, 1 << q);
    pp += cs.sector;
  }
  for (std::size_t g = 0; g < rule.groups.size(); ++g) {
    auto& hs = out.groups[g];
    const CVector target = ghz_vector(q, hs.sign);
    hs.in_sector_probability = sector[g].trace().real();
    hs.sector_weight = hs.herald_probability > 0 ? hs.in_sector_probability / hs.herald_probability : 0.0;
    if (hs.in_sector_probability > 0) {
      hs.rho = sector[g] / hs.in_sector_probability;
      hs.fidelity = state_fidelity(hs.rho, target);
    }
    for (const auto& p : rule.groups[g].patterns) {
      auto it = per_pattern[g].find(p);
      const double prob = it == per_pattern[g].end() ? 0.0 : it->second.trace().real();
      hs.pattern_probability[p] = prob;
      hs.pattern_fidelity[p] = prob > 0 ? state_fidelity(it->second / prob, target) : 0.0;
    }
  }
  return out;
}

/// Heralded signal state of one group, mixed over its accepted patterns.
inline HeraldedState heralded_state(const MixedEnsemble& ensemble, const Circuit& circuit, const DetectorConfig& cfg,
                                    const HeraldRule& rule, const std::string& group, int max_singletons = -1) {
  const auto analysis = herald_analysis(ensemble, circuit, cfg, rule, max_singletons);
  for (const auto& g : analysis.groups) {
    if (g.group != group) continue;
    if (!(g.in_sector_probability > 0))
      fail(ErrorCode::degenerate_herald, "herald group " + group + " has zero success probability");
    return g;
  }
  fail(ErrorCode::argument, "unknown herald group '" + group + "'");
}

struct HeraldTable {
  HeraldAnalysis analysis;
  double total_in_sector = 0.0;
  double total_herald = 0.0;
};

/// Herald table of a circuit with ideal sources.
inline HeraldTable herald_table(const Circuit& circuit, const DetectorConfig& cfg, const HeraldRule& rule) {
  int photons = 0;
  for (const auto& in : circuit.inputs) photons += in.photon;
  if (photons == 0) fail(ErrorCode::validation, "herald_table: circuit has no photon inputs");
  const auto ens = input_ensemble(SourcePhysicsParams::ideal(photons), circuit);
  HeraldTable t;
  t.analysis = herald_analysis(ens, circuit, cfg, rule);
  for (const auto& g : t.analysis.groups) {
    t.total_in_sector += g.in_sector_probability;
    t.total_herald += g.herald_probability;
  }
  return t;
}

}  // namespace hghz
