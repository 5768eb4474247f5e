#pragma once

// Polarization interferometers built from waveplates, polarizing and
// non-polarizing beamsplitters and phase shifters.
//
// Conventions (basis order h, v; waveplate angles measured from the h axis):
//   HWP(t)   = [[cos 2t,  sin 2t], [sin 2t, -cos 2t]]
//   QWP(t)   = [[cos^2 t + i sin^2 t, (1 - i) sin t cos t],
//               [(1 - i) sin t cos t, sin^2 t + i cos^2 t]]
//   phase(f) = exp(i f) on both polarizations of one spatial mode
//   PBS(a,b) transmits h (a->a, b->b) and reflects v with a factor i
//            (a_v -> i b_v, b_v -> i a_v)
//   BS(r)    on each polarization: [[t, i sqrt(r)], [i sqrt(r), t]], t = sqrt(1 - r)
//
// A compiled circuit acts on external modes (spatial, polarization) with index
// 2 * spatial + polarization; internal labels are untouched.

#include "hghz/error.hpp"
#include "hghz/fock.hpp"
#include "hghz/linalg.hpp"

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hghz {

enum class ElementKind { hwp, qwp, pbs, bs, phase };

constexpr std::string_view kind_name(ElementKind k) {
  switch (k) {
    case ElementKind::hwp: return "hwp";
    case ElementKind::qwp: return "qwp";
    case ElementKind::pbs: return "pbs";
    case ElementKind::bs: return "bs";
    case ElementKind::phase: return "phase";
  }
  return "?";
}

inline std::optional<ElementKind> parse_kind(std::string_view s) {
  for (auto k : {ElementKind::hwp, ElementKind::qwp, ElementKind::pbs, ElementKind::bs, ElementKind::phase})
    if (kind_name(k) == s) return k;
  return std::nullopt;
}

constexpr int target_count(ElementKind k) {
  return (k == ElementKind::pbs || k == ElementKind::bs) ? 2 : 1;
}

struct Element {
  ElementKind kind = ElementKind::hwp;
  std::vector<int> targets;  // spatial mode indices
  double parameter = 0.0;    // angle (rad), reflectivity, or phase (rad)

  friend bool operator==(const Element&, const Element&) = default;

  static Element hwp(int mode, double angle) { return {ElementKind::hwp, {mode}, angle}; }
  static Element qwp(int mode, double angle) { return {ElementKind::qwp, {mode}, angle}; }
  static Element phase(int mode, double phi) { return {ElementKind::phase, {mode}, phi}; }
  static Element pbs(int a, int b) { return {ElementKind::pbs, {a, b}, 0.0}; }
  static Element bs(int a, int b, double reflectivity = 0.5) { return {ElementKind::bs, {a, b}, reflectivity}; }
};

/// Initial single-photon polarization of an input.
enum class InputPolarization { h, v, d, a, r, l };

constexpr std::string_view input_polarization_name(InputPolarization p) {
  constexpr std::string_view names[] = {"h", "v", "d", "a", "r", "l"};
  return names[static_cast<int>(p)];
}

inline std::optional<InputPolarization> parse_input_polarization(std::string_view s) {
  for (int i = 0; i < 6; ++i)
    if (input_polarization_name(static_cast<InputPolarization>(i)) == s) return static_cast<InputPolarization>(i);
  return std::nullopt;
}

/// Jones vector (h, v) of an input polarization.
inline Eigen::Vector2cd jones(InputPolarization p) {
  const double s = 1.0 / std::sqrt(2.0);
  const cplx i{0, 1};
  switch (p) {
    case InputPolarization::h: return {1, 0};
    case InputPolarization::v: return {0, 1};
    case InputPolarization::d: return {s, s};
    case InputPolarization::a: return {s, -s};
    case InputPolarization::r: return {s, -i * s};
    case InputPolarization::l: return {s, i * s};
  }
  return {1, 0};
}

struct InputSpec {
  int mode = 0;
  bool photon = true;
  InputPolarization polarization = InputPolarization::h;

  friend bool operator==(const InputSpec&, const InputSpec&) = default;
};

struct Circuit {
  std::vector<std::string> spatial_modes;
  std::vector<InputSpec> inputs;
  std::vector<Element> elements;

  friend bool operator==(const Circuit&, const Circuit&) = default;

  int n_spatial() const { return static_cast<int>(spatial_modes.size()); }
  int n_external() const { return 2 * n_spatial(); }

  int mode_index(std::string_view label) const {
    for (int i = 0; i < n_spatial(); ++i)
      if (spatial_modes[i] == label) return i;
    return -1;
  }
};

inline void validate(const Element& e, int n_spatial) {
  if (static_cast<int>(e.targets.size()) != target_count(e.kind))
    fail(ErrorCode::validation, std::string(kind_name(e.kind)) + ": expected " +
                                    std::to_string(target_count(e.kind)) + " target(s)");
  for (int t : e.targets)
    if (t < 0 || t >= n_spatial)
      fail(ErrorCode::validation, std::string(kind_name(e.kind)) + ": target " + std::to_string(t) +
                                      " is not a declared mode");
  if (e.targets.size() == 2 && e.targets[0] == e.targets[1])
    fail(ErrorCode::validation, std::string(kind_name(e.kind)) + ": targets must be distinct");
  if (!std::isfinite(e.parameter))
    fail(ErrorCode::validation, std::string(kind_name(e.kind)) + ": parameter is not finite");
  if (e.kind == ElementKind::bs && (e.parameter < 0.0 || e.parameter > 1.0))
    fail(ErrorCode::validation, "bs: reflectivity must lie in [0, 1]");
}

inline void validate(const Circuit& c) {
  if (c.spatial_modes.empty()) fail(ErrorCode::validation, "circuit: no spatial modes declared");
  for (int i = 0; i < c.n_spatial(); ++i)
    for (int j = i + 1; j < c.n_spatial(); ++j)
      if (c.spatial_modes[i] == c.spatial_modes[j])
        fail(ErrorCode::validation, "circuit: duplicate mode label '" + c.spatial_modes[i] + "'");
  std::vector<bool> seen(c.n_spatial(), false);
  for (const auto& in : c.inputs) {
    if (in.mode < 0 || in.mode >= c.n_spatial())
      fail(ErrorCode::validation, "circuit: input on undeclared mode " + std::to_string(in.mode));
    if (seen[in.mode]) fail(ErrorCode::validation, "circuit: duplicate input on mode " + c.spatial_modes[in.mode]);
    seen[in.mode] = true;
  }
  for (const auto& e : c.elements) validate(e, c.n_spatial());
}

/// The 2x2 (single-mode) or 4x4 (two-mode, order a_h, a_v, b_h, b_v) block.
inline CMatrix element_unitary(const Element& e) {
  const cplx i{0, 1};
  const double t = e.parameter;
  switch (e.kind) {
    case ElementKind::hwp: {
      CMatrix m(2, 2);
      m << std::cos(2 * t), std::sin(2 * t), std::sin(2 * t), -std::cos(2 * t);
      return m;
    }
    case ElementKind::qwp: {
      const double c = std::cos(t), s = std::sin(t);
      CMatrix m(2, 2);
      m << c * c + i * s * s, (1.0 - i) * s * c, (1.0 - i) * s * c, s * s + i * c * c;
      return m;
    }
    case ElementKind::phase: return std::exp(i * t) * CMatrix::Identity(2, 2);
    case ElementKind::pbs: {
      CMatrix m = CMatrix::Zero(4, 4);
      m(0, 0) = 1;  // a_h -> a_h
      m(2, 2) = 1;  // b_h -> b_h
      m(3, 1) = i;  // a_v -> b_v
      m(1, 3) = i;  // b_v -> a_v
      return m;
    }
    case ElementKind::bs: {
      const double tr = std::sqrt(1.0 - t), r = std::sqrt(t);
      CMatrix m = CMatrix::Zero(4, 4);
      for (int p = 0; p < 2; ++p) {
        m(p, p) = tr;
        m(2 + p, 2 + p) = tr;
        m(p, 2 + p) = i * r;
        m(2 + p, p) = i * r;
      }
      return m;
    }
  }
  fail(ErrorCode::validation, "element_unitary: unknown element kind");
}

/// Embeds one element into the full external-mode unitary.
inline CMatrix embed(const Element& e, int n_spatial) {
  const CMatrix block = element_unitary(e);
  std::vector<int> idx;
  for (int t : e.targets) {
    idx.push_back(2 * t);
    idx.push_back(2 * t + 1);
  }
  CMatrix u = CMatrix::Identity(2 * n_spatial, 2 * n_spatial);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) u(idx[r], idx[c]) = block(r, c);
  return u;
}

/// Composes the element list (first element acts first) into a unitary over
/// the 2 * n_spatial external modes.
inline CMatrix compile(const Circuit& c) {
  validate(c);
  CMatrix u = CMatrix::Identity(c.n_external(), c.n_external());
  for (const auto& e : c.elements) u = embed(e, c.n_spatial()) * u;
  return u;
}

/// Lifts an external-mode unitary to flattened modes (identity on internal labels).
inline CMatrix lift_internal(const CMatrix& external, int n_internal) {
  return kron(external, CMatrix::Identity(n_internal, n_internal));
}

/// Reconstructed six-photon heralded GHZ interferometer. Spatial mode k carries
/// input i_k and leaves as output o_k. All inputs start horizontal.
///
///  1. HWP(pi/8) on every input (h -> d).
///  2. PBS1 (o1, o6), PBS2 (o2, o5), PBS3 (o3, o4): three postselected Bell
///     pairs, one half on o1..o3 and the other on o6, o5, o4.
///  3. HWP(pi/8) on o4..o6, then PBS4 (o4, o5) and PBS5 (o5, o6): parity
///     fusion of the three ancillary halves. The waveplate turns an unwanted
///     |hv> pair in one arm into a bunched |hh> or |vv> pair that the PBSs
///     keep together, so number-resolved heralding can reject it.
///  4. HWP(pi/8) on o4..o6 (diagonal-basis herald analysis) and on o1..o3
///     (rotates the signal GHZ from the X to the Z basis).
///
/// One photon at each of o4, o5, o6 heralds (|000> + |111>)/sqrt2 for an even
/// number of v clicks and (|000> - |111>)/sqrt2 for an odd number, each of the
/// eight patterns with probability 1/256.
inline Circuit reference_circuit() {
  Circuit c;
  c.spatial_modes = {"o1", "o2", "o3", "o4", "o5", "o6"};
  for (int m = 0; m < 6; ++m) c.inputs.push_back({m, true, InputPolarization::h});
  const double diag = pi / 8;
  for (int m = 0; m < 6; ++m) c.elements.push_back(Element::hwp(m, diag));
  c.elements.push_back(Element::pbs(0, 5));
  c.elements.push_back(Element::pbs(1, 4));
  c.elements.push_back(Element::pbs(2, 3));
  for (int m = 3; m < 6; ++m) c.elements.push_back(Element::hwp(m, diag));
  c.elements.push_back(Element::pbs(3, 4));
  c.elements.push_back(Element::pbs(4, 5));
  for (int m = 0; m < 6; ++m) c.elements.push_back(Element::hwp(m, diag));
  return c;
}

/// Renames spatial modes: mode k becomes mode perm[k] everywhere.
inline Circuit relabel(const Circuit& c, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != c.n_spatial())
    fail(ErrorCode::argument, "relabel: permutation size mismatch");
  Circuit out;
  out.spatial_modes.resize(c.spatial_modes.size());
  for (int k = 0; k < c.n_spatial(); ++k) out.spatial_modes[perm[k]] = c.spatial_modes[k];
  for (auto in : c.inputs) {
    in.mode = perm[in.mode];
    out.inputs.push_back(in);
  }
  for (auto e : c.elements) {
    for (int& t : e.targets) t = perm[t];
    out.elements.push_back(e);
  }
  return out;
}

}  // namespace hghz
