#pragma once

// Run configuration (JSON). Every block is optional; unknown keys are
// rejected with the JSON pointer of the offending field.
//
//   circuit      "reference", a file path, or an inline circuit object
//   source       {indistinguishability: x | matrix, g2: x | p2: x, input_efficiency: x | [..]}
//   detectors    {signal_outputs: [labels], herald_outputs: [labels], ppnr, signal_efficiency, herald_efficiency}
//   herald_rule  {groups: [{name, sign, patterns: [..]}]}
//   tomography   {algorithm: mle | linear, bootstrap, seed, witness_errors, max_iterations, tolerance, groups}
//   sampler      {trigger_rate, duration_per_setting}
//   budget       {base_rate, factors: [{label, efficiency, multiplicity}], success_probability: "1/32"}
//   demux        {stages: [{switches, modulation_hz, transmission}], source_rate, repetition_rate,
//                 per_photon_efficiency, anchors: [{n, rate}]}
//   simulation   {max_singletons}
//   output       {directory}

#include "hghz/circuit.hpp"
#include "hghz/circuit_io.hpp"
#include "hghz/detection.hpp"
#include "hghz/json_util.hpp"
#include "hghz/rates.hpp"
#include "hghz/sampling.hpp"
#include "hghz/source.hpp"
#include "hghz/tomography.hpp"

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hghz {

/// Six-photon events entering the interferometer per second for the measured
/// source: detected six-fold rate times interferometer and fibre throughput.
inline double paper_trigger_rate() { return 547.0 * std::pow(0.8, 6) * std::pow(0.85, 6); }

struct RunConfig {
  std::string circuit_source = "reference";
  Circuit circuit = reference_circuit();
  std::optional<SourcePhysicsParams> source;
  DetectorConfig detectors = DetectorConfig::reference();
  HeraldRule rule = HeraldRule::reference();
  TomographyOptions tomography;
  std::vector<std::string> tomography_groups;  // empty: every group of the rule
  double trigger_rate = paper_trigger_rate();
  double duration_per_setting = 900.0;
  RateBudget budget = RateBudget::paper();
  DemuxTree demux = DemuxTree::reference();
  double per_photon_efficiency = 1.0;
  std::vector<RateAnchor> anchors{{6, 547.0}, {8, 15.7}};
  int max_singletons = 2;
  std::string output_directory;

  int photons() const {
    int n = 0;
    for (const auto& in : circuit.inputs) n += in.photon;
    return n;
  }

  SourcePhysicsParams source_or_ideal() const { return source ? *source : SourcePhysicsParams::ideal(photons()); }
};

namespace config_detail {

inline Circuit circuit_block(const json::json& j, const std::string& base_dir, std::string& label) {
  if (j.is_object()) {
    label = "inline";
    try {
      return circuit_from_json(j);
    } catch (const Error& e) {
      fail(e.code(), "/circuit" + std::string(e.what()));
    }
  }
  label = json::string(j, "/circuit");
  if (label == "reference") return reference_circuit();
  std::filesystem::path p(label);
  if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
  return load_circuit(p.string());
}

inline SourcePhysicsParams source_block(const json::json& j, int n) {
  using namespace hghz::json;
  const std::string ptr = "/source";
  check_keys(j, ptr, {"indistinguishability", "g2", "p2", "input_efficiency"});
  if (n == 0) schema_error(ptr, "circuit has no photon inputs");
  auto p = SourcePhysicsParams::ideal(n);
  if (j.contains("indistinguishability")) {
    const auto& v = j.at("indistinguishability");
    const std::string vp = ptr + "/indistinguishability";
    if (v.is_number()) {
      p = SourcePhysicsParams::uniform(n, v.get<double>());
    } else {
      const auto& rows = array(v, vp);
      if (static_cast<int>(rows.size()) != n) schema_error(vp, "expected " + std::to_string(n) + " rows");
      for (int r = 0; r < n; ++r) {
        const auto& row = array(rows[r], vp + "/" + std::to_string(r));
        if (static_cast<int>(row.size()) != n) schema_error(vp + "/" + std::to_string(r), "expected " + std::to_string(n) + " entries");
        for (int c = 0; c < n; ++c)
          p.indistinguishability(r, c) = number(row[c], vp + "/" + std::to_string(r) + "/" + std::to_string(c));
      }
    }
  }
  if (j.contains("g2") && j.contains("p2")) schema_error(ptr, "give either g2 or p2, not both");
  if (j.contains("p2")) p.impurity = number(j.at("p2"), ptr + "/p2");
  if (j.contains("g2")) {
    try {
      p.impurity = p2_from_g2(number(j.at("g2"), ptr + "/g2"));
    } catch (const Error& e) {
      schema_error(ptr + "/g2", e.what());
    }
  }
  if (j.contains("input_efficiency")) {
    const auto& v = j.at("input_efficiency");
    const std::string vp = ptr + "/input_efficiency";
    if (v.is_number()) {
      p.channel_efficiency.assign(n, v.get<double>());
    } else {
      const auto& list = array(v, vp);
      if (static_cast<int>(list.size()) != n) schema_error(vp, "expected " + std::to_string(n) + " entries");
      for (int c = 0; c < n; ++c) p.channel_efficiency[c] = number(list[c], vp + "/" + std::to_string(c));
    }
  }
  try {
    p.validate();
    internal_vectors(p.indistinguishability);
  } catch (const Error& e) {
    schema_error(ptr, e.what());
  }
  return p;
}

inline std::vector<int> output_list(const json::json& j, const std::string& ptr, const Circuit& c) {
  std::vector<int> out;
  const auto& list = json::array(j, ptr);
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string label = json::string(list[i], ptr + "/" + std::to_string(i));
    const int idx = c.mode_index(label);
    if (idx < 0) json::schema_error(ptr + "/" + std::to_string(i), "unknown mode '" + label + "'");
    out.push_back(idx);
  }
  return out;
}

inline DetectorConfig detector_block(const json::json& j, const Circuit& c) {
  using namespace hghz::json;
  const std::string ptr = "/detectors";
  check_keys(j, ptr, {"signal_outputs", "herald_outputs", "ppnr", "signal_efficiency", "herald_efficiency"});
  DetectorConfig d = DetectorConfig::reference();
  d.labels = c.spatial_modes;
  if (j.contains("signal_outputs")) d.signal_outputs = output_list(j.at("signal_outputs"), ptr + "/signal_outputs", c);
  if (j.contains("herald_outputs")) d.herald_outputs = output_list(j.at("herald_outputs"), ptr + "/herald_outputs", c);
  if (j.contains("ppnr")) d.ppnr = boolean(j.at("ppnr"), ptr + "/ppnr");
  if (j.contains("signal_efficiency")) d.signal_efficiency = number(j.at("signal_efficiency"), ptr + "/signal_efficiency");
  if (j.contains("herald_efficiency")) d.herald_efficiency = number(j.at("herald_efficiency"), ptr + "/herald_efficiency");
  try {
    d.validate(c.n_spatial());
  } catch (const Error& e) {
    schema_error(ptr, e.what());
  }
  return d;
}

inline HeraldRule herald_block(const json::json& j, int n_herald) {
  using namespace hghz::json;
  const std::string ptr = "/herald_rule";
  check_keys(j, ptr, {"groups"});
  HeraldRule rule;
  const auto& groups = array(member(j, ptr, "groups"), ptr + "/groups");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::string gp = ptr + "/groups/" + std::to_string(g);
    check_keys(groups[g], gp, {"name", "sign", "patterns"});
    HeraldGroup group;
    group.name = string(member(groups[g], gp, "name"), gp + "/name");
    group.sign = static_cast<int>(integer(member(groups[g], gp, "sign"), gp + "/sign"));
    const auto& pats = array(member(groups[g], gp, "patterns"), gp + "/patterns");
    for (std::size_t k = 0; k < pats.size(); ++k) group.patterns.push_back(string(pats[k], gp + "/patterns/" + std::to_string(k)));
    rule.groups.push_back(group);
  }
  try {
    rule.validate(n_herald);
  } catch (const Error& e) {
    schema_error(ptr, e.what());
  }
  return rule;
}

inline Rational rational(const json::json& j, const std::string& ptr) {
  if (j.is_number_integer() && j.get<long long>() == 1) return {1, 1};
  const std::string s = json::string(j, ptr);
  const auto slash = s.find('/');
  Rational r;
  try {
    std::size_t used = 0;
    r.num = std::stoll(s.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument(s);
    r.den = slash == std::string::npos ? 1 : std::stoll(s.substr(slash + 1), &used);
    if (slash != std::string::npos && used != s.size() - slash - 1) throw std::invalid_argument(s);
  } catch (const std::exception&) {
    json::schema_error(ptr, "expected a fraction such as \"1/32\"");
  }
  return r;
}

}  // namespace config_detail

/// Budget block, also accepted as a standalone file.
inline RateBudget budget_from_json(const json::json& j, const std::string& ptr = "/budget") {
  using namespace hghz::json;
  check_keys(j, ptr, {"base_rate", "factors", "success_probability"});
  RateBudget b;
  b.base_rate = number(member(j, ptr, "base_rate"), ptr + "/base_rate");
  if (j.contains("factors")) {
    const auto& f = array(j.at("factors"), ptr + "/factors");
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::string fp = ptr + "/factors/" + std::to_string(i);
      check_keys(f[i], fp, {"label", "efficiency", "multiplicity"});
      RateFactor rf;
      if (f[i].contains("label")) rf.label = string(f[i].at("label"), fp + "/label");
      rf.efficiency = number(member(f[i], fp, "efficiency"), fp + "/efficiency");
      if (f[i].contains("multiplicity")) rf.multiplicity = static_cast<int>(integer(f[i].at("multiplicity"), fp + "/multiplicity"));
      b.factors.push_back(rf);
    }
  }
  if (j.contains("success_probability"))
    b.success_probability = config_detail::rational(j.at("success_probability"), ptr + "/success_probability");
  try {
    b.validate();
  } catch (const Error& e) {
    schema_error(ptr, e.what());
  }
  return b;
}

/// `base_dir` resolves relative circuit paths (normally the config's folder).
inline RunConfig config_from_json(const json::json& j, const std::string& base_dir = "") {
  using namespace hghz::json;
  check_keys(j, "", {"circuit", "source", "detectors", "herald_rule", "tomography", "sampler", "budget", "demux",
                     "simulation", "output"});
  RunConfig cfg;
  if (j.contains("circuit")) cfg.circuit = config_detail::circuit_block(j.at("circuit"), base_dir, cfg.circuit_source);
  if (j.contains("detectors")) {
    cfg.detectors = config_detail::detector_block(j.at("detectors"), cfg.circuit);
  } else {
    cfg.detectors.labels = cfg.circuit.spatial_modes;
    try {
      cfg.detectors.validate(cfg.circuit.n_spatial());
    } catch (const Error& e) {
      schema_error("/detectors", std::string("default layout does not fit the circuit: ") + e.what());
    }
  }
  if (j.contains("herald_rule")) {
    cfg.rule = config_detail::herald_block(j.at("herald_rule"), static_cast<int>(cfg.detectors.herald_outputs.size()));
  } else {
    try {
      cfg.rule.validate(static_cast<int>(cfg.detectors.herald_outputs.size()));
    } catch (const Error& e) {
      schema_error("/herald_rule", std::string("default rule does not fit the detectors: ") + e.what());
    }
  }
  if (j.contains("source")) cfg.source = config_detail::source_block(j.at("source"), cfg.photons());

  if (j.contains("tomography")) {
    const auto& t = j.at("tomography");
    const std::string ptr = "/tomography";
    check_keys(t, ptr, {"algorithm", "bootstrap", "seed", "witness_errors", "max_iterations", "tolerance", "groups"});
    auto& o = cfg.tomography;
    if (t.contains("algorithm")) {
      const auto a = string(t.at("algorithm"), ptr + "/algorithm");
      if (a == "mle") o.algorithm = Reconstruction::mle;
      else if (a == "linear") o.algorithm = Reconstruction::linear;
      else schema_error(ptr + "/algorithm", "expected mle or linear");
    }
    if (t.contains("bootstrap")) {
      const auto b = integer(t.at("bootstrap"), ptr + "/bootstrap");
      if (b < 0) schema_error(ptr + "/bootstrap", "must be >= 0");
      o.bootstrap = static_cast<int>(b);
    }
    if (t.contains("seed")) o.seed = static_cast<std::uint64_t>(integer(t.at("seed"), ptr + "/seed"));
    if (t.contains("witness_errors")) {
      const auto w = string(t.at("witness_errors"), ptr + "/witness_errors");
      if (w == "same_setting_zz") o.witness_errors = WitnessErrors::same_setting_zz;
      else if (w == "independent") o.witness_errors = WitnessErrors::independent;
      else schema_error(ptr + "/witness_errors", "expected same_setting_zz or independent");
    }
    if (t.contains("max_iterations")) {
      const auto m = integer(t.at("max_iterations"), ptr + "/max_iterations");
      if (m < 1) schema_error(ptr + "/max_iterations", "must be >= 1");
      o.mle.max_iterations = static_cast<int>(m);
    }
    if (t.contains("tolerance")) {
      o.mle.tolerance = number(t.at("tolerance"), ptr + "/tolerance");
      if (!(o.mle.tolerance > 0)) schema_error(ptr + "/tolerance", "must be > 0");
    }
    if (t.contains("groups")) {
      const auto& g = array(t.at("groups"), ptr + "/groups");
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto name = string(g[i], ptr + "/groups/" + std::to_string(i));
        bool known = false;
        for (const auto& rg : cfg.rule.groups) known = known || rg.name == name;
        if (!known) schema_error(ptr + "/groups/" + std::to_string(i), "no herald group named '" + name + "'");
        cfg.tomography_groups.push_back(name);
      }
    }
  }

  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    check_keys(s, "/sampler", {"trigger_rate", "duration_per_setting"});
    if (s.contains("trigger_rate")) cfg.trigger_rate = number(s.at("trigger_rate"), "/sampler/trigger_rate");
    if (s.contains("duration_per_setting"))
      cfg.duration_per_setting = number(s.at("duration_per_setting"), "/sampler/duration_per_setting");
    if (!(cfg.trigger_rate >= 0)) schema_error("/sampler/trigger_rate", "must be >= 0");
    if (!(cfg.duration_per_setting > 0)) schema_error("/sampler/duration_per_setting", "must be > 0");
  }

  if (j.contains("budget")) cfg.budget = budget_from_json(j.at("budget"));

  if (j.contains("demux")) {
    const auto& d = j.at("demux");
    const std::string ptr = "/demux";
    check_keys(d, ptr, {"stages", "source_rate", "repetition_rate", "per_photon_efficiency", "anchors"});
    if (d.contains("stages")) {
      cfg.demux.stages.clear();
      const auto& st = array(d.at("stages"), ptr + "/stages");
      for (std::size_t i = 0; i < st.size(); ++i) {
        const std::string sp = ptr + "/stages/" + std::to_string(i);
        check_keys(st[i], sp, {"switches", "modulation_hz", "transmission"});
        DemuxStage stage;
        stage.switches = static_cast<int>(integer(member(st[i], sp, "switches"), sp + "/switches"));
        stage.modulation_hz = number(member(st[i], sp, "modulation_hz"), sp + "/modulation_hz");
        if (st[i].contains("transmission")) stage.transmission = number(st[i].at("transmission"), sp + "/transmission");
        cfg.demux.stages.push_back(stage);
      }
    }
    if (d.contains("source_rate")) cfg.demux.source_rate = number(d.at("source_rate"), ptr + "/source_rate");
    if (d.contains("repetition_rate")) cfg.demux.repetition_rate = number(d.at("repetition_rate"), ptr + "/repetition_rate");
    if (d.contains("per_photon_efficiency"))
      cfg.per_photon_efficiency = number(d.at("per_photon_efficiency"), ptr + "/per_photon_efficiency");
    if (d.contains("anchors")) {
      cfg.anchors.clear();
      const auto& a = array(d.at("anchors"), ptr + "/anchors");
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string ap = ptr + "/anchors/" + std::to_string(i);
        check_keys(a[i], ap, {"n", "rate"});
        cfg.anchors.push_back({static_cast<int>(integer(member(a[i], ap, "n"), ap + "/n")),
                               number(member(a[i], ap, "rate"), ap + "/rate")});
      }
    }
    try {
      cfg.demux.validate();
    } catch (const Error& e) {
      schema_error(ptr, e.what());
    }
    if (!(cfg.per_photon_efficiency > 0 && cfg.per_photon_efficiency <= 1))
      schema_error(ptr + "/per_photon_efficiency", "must lie in (0, 1]");
  }

  if (j.contains("simulation")) {
    const auto& s = j.at("simulation");
    check_keys(s, "/simulation", {"max_singletons"});
    if (s.contains("max_singletons")) {
      const auto m = integer(s.at("max_singletons"), "/simulation/max_singletons");
      if (m < -1) schema_error("/simulation/max_singletons", "must be >= -1 (-1 keeps every branch)");
      cfg.max_singletons = static_cast<int>(m);
    }
  }

  if (j.contains("output")) {
    check_keys(j.at("output"), "/output", {"directory"});
    if (j.at("output").contains("directory")) cfg.output_directory = string(j.at("output").at("directory"), "/output/directory");
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path().string();
  try {
    return config_from_json(json::parse_file(path), dir);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) throw;
    fail(e.code(), path + ": " + e.what());
  }
}

}  // namespace hghz
