#pragma once

// Circuit files (JSON). Schema, see docs/circuit-format.md:
//
//   {
//     "modes":    ["o1", "o2", ...],
//     "inputs":   [{"mode": "o1", "polarization": "h", "photon": true}, ...],
//     "elements": [{"kind": "hwp", "targets": ["o1"], "parameter": 0.3927}, ...]
//   }
//
// "photon" defaults to true and "polarization" to "h". "parameter" is
// required for every kind except pbs, where it must be absent or zero.

#include "hghz/circuit.hpp"
#include "hghz/json_util.hpp"

#include <string>

namespace hghz {

inline Circuit circuit_from_json(const json::json& j) {
  using namespace hghz::json;
  check_keys(j, "", {"modes", "inputs", "elements"});
  Circuit c;
  const auto& modes = array(member(j, "", "modes"), "/modes");
  for (std::size_t i = 0; i < modes.size(); ++i)
    c.spatial_modes.push_back(string(modes[i], "/modes/" + std::to_string(i)));

  auto lookup = [&](const json::json& v, const std::string& ptr) {
    const std::string label = string(v, ptr);
    const int idx = c.mode_index(label);
    if (idx < 0) schema_error(ptr, "undeclared mode '" + label + "'");
    return idx;
  };

  if (j.contains("inputs")) {
    const auto& inputs = array(j.at("inputs"), "/inputs");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const std::string ptr = "/inputs/" + std::to_string(i);
      check_keys(inputs[i], ptr, {"mode", "polarization", "photon"});
      InputSpec in;
      in.mode = lookup(member(inputs[i], ptr, "mode"), ptr + "/mode");
      if (inputs[i].contains("polarization")) {
        const auto p = parse_input_polarization(string(inputs[i].at("polarization"), ptr + "/polarization"));
        if (!p) schema_error(ptr + "/polarization", "expected one of h, v, d, a, r, l");
        in.polarization = *p;
      }
      if (inputs[i].contains("photon")) in.photon = boolean(inputs[i].at("photon"), ptr + "/photon");
      c.inputs.push_back(in);
    }
  }

  if (j.contains("elements")) {
    const auto& elements = array(j.at("elements"), "/elements");
    for (std::size_t i = 0; i < elements.size(); ++i) {
      const std::string ptr = "/elements/" + std::to_string(i);
      check_keys(elements[i], ptr, {"kind", "targets", "parameter"});
      Element e;
      const std::string kind = string(member(elements[i], ptr, "kind"), ptr + "/kind");
      const auto k = parse_kind(kind);
      if (!k) schema_error(ptr + "/kind", "unknown element kind '" + kind + "'");
      e.kind = *k;
      const auto& targets = array(member(elements[i], ptr, "targets"), ptr + "/targets");
      for (std::size_t t = 0; t < targets.size(); ++t)
        e.targets.push_back(lookup(targets[t], ptr + "/targets/" + std::to_string(t)));
      if (elements[i].contains("parameter")) {
        e.parameter = number(elements[i].at("parameter"), ptr + "/parameter");
      } else if (e.kind != ElementKind::pbs) {
        schema_error(ptr, "missing required field 'parameter'");
      }
      if (e.kind == ElementKind::pbs && e.parameter != 0.0) schema_error(ptr + "/parameter", "pbs takes no parameter");
      try {
        validate(e, c.n_spatial());
      } catch (const Error& err) {
        schema_error(ptr, err.what());
      }
      c.elements.push_back(e);
    }
  }
  validate(c);
  return c;
}

inline Circuit parse_circuit(const std::string& text) {
  return circuit_from_json(json::parse_text(text, "circuit"));
}

inline Circuit load_circuit(const std::string& path) {
  return circuit_from_json(json::parse_file(path));
}

inline json::json circuit_to_json(const Circuit& c) {
  json::json j;
  j["modes"] = c.spatial_modes;
  j["inputs"] = json::json::array();
  for (const auto& in : c.inputs)
    j["inputs"].push_back({{"mode", c.spatial_modes.at(in.mode)},
                           {"polarization", std::string(input_polarization_name(in.polarization))},
                           {"photon", in.photon}});
  j["elements"] = json::json::array();
  for (const auto& e : c.elements) {
    json::json je;
    je["kind"] = std::string(kind_name(e.kind));
    je["targets"] = json::json::array();
    for (int t : e.targets) je["targets"].push_back(c.spatial_modes.at(t));
    if (e.kind != ElementKind::pbs) je["parameter"] = e.parameter;
    j["elements"].push_back(je);
  }
  return j;
}

inline std::string render_circuit(const Circuit& c) { return circuit_to_json(c).dump(2) + "\n"; }

}  // namespace hghz
