#pragma once

// Three-qubit state tomography from Pauli-setting counts.
//
// Conventions: qubit 1 is the most significant bit of every index. In a
// setting such as "XZY" each photon is measured in the eigenbasis of its
// letter; outcome bit 0 is the +1 eigenstate (|h>, |+>, |+i>), bit 1 the -1
// eigenstate. Expectations of strings containing I are marginals pooled over
// every setting that agrees on the non-identity letters.

#include "hghz/error.hpp"
#include "hghz/linalg.hpp"
#include "hghz/log.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace hghz {

inline constexpr int tomo_qubits = 3;
inline constexpr int tomo_dim = 1 << tomo_qubits;

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

using OutcomeCounts = std::array<double, tomo_dim>;

struct TomographyData {
  std::map<std::string, OutcomeCounts> settings;  // "XYZ" -> counts per outcome index
  double duration = 0.0;                          // acquisition time summed over settings, seconds

  double total() const {
    double s = 0;
    for (const auto& [name, c] : settings)
      for (double n : c) s += n;
    return s;
  }
};

inline bool valid_setting(const std::string& s) {
  if (s.size() != tomo_qubits) return false;
  for (char c : s)
    if (c != 'X' && c != 'Y' && c != 'Z') return false;
  return true;
}

/// The 27 settings in lexicographic order XXX, XXY, ..., ZZZ.
inline std::vector<std::string> pauli_settings() {
  std::vector<std::string> out;
  const std::string letters = "XYZ";
  for (char a : letters)
    for (char b : letters)
      for (char c : letters) out.push_back({a, b, c});
  return out;
}

/// The 64 Pauli strings over {I, X, Y, Z} in lexicographic order.
inline std::vector<std::string> pauli_strings() {
  std::vector<std::string> out;
  const std::string letters = "IXYZ";
  for (char a : letters)
    for (char b : letters)
      for (char c : letters) out.push_back({a, b, c});
  return out;
}

inline CMatrix pauli_matrix(char letter) {
  const cplx i{0, 1};
  CMatrix m(2, 2);
  switch (letter) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -i, i, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: fail(ErrorCode::argument, std::string("unknown Pauli letter '") + letter + "'");
  }
  return m;
}

inline CMatrix pauli_operator(const std::string& s) {
  CMatrix m = CMatrix::Identity(1, 1);
  for (char c : s) m = kron(m, pauli_matrix(c));
  return m;
}

/// Eigenvector of `letter` with eigenvalue (-1)^bit.
inline CVector pauli_eigenvector(char letter, int bit) {
  const double s = 1 / std::sqrt(2.0);
  const cplx i{0, 1};
  CVector v(2);
  switch (letter) {
    case 'Z': v << (bit ? 0.0 : 1.0), (bit ? 1.0 : 0.0); break;
    case 'X': v << s, (bit ? -s : s); break;
    case 'Y': v << s, (bit ? -i * s : i * s); break;
    default: fail(ErrorCode::argument, std::string("no measurement basis for '") + letter + "'");
  }
  return v;
}

inline CMatrix projector(const std::string& setting, int outcome) {
  CVector v = CVector::Ones(1);
  for (int q = 0; q < tomo_qubits; ++q) {
    const CVector e = pauli_eigenvector(setting[q], (outcome >> (tomo_qubits - 1 - q)) & 1);
    CVector next(v.size() * 2);
    for (Eigen::Index a = 0; a < v.size(); ++a)
      for (int b = 0; b < 2; ++b) next(2 * a + b) = v(a) * e(b);
    v = next;
  }
  return v * v.adjoint();
}

/// Eigenvalue of Pauli string `pauli` on outcome `outcome` of a compatible setting.
inline int outcome_sign(const std::string& pauli, int outcome) {
  int sign = 1;
  for (int q = 0; q < tomo_qubits; ++q)
    if (pauli[q] != 'I' && ((outcome >> (tomo_qubits - 1 - q)) & 1)) sign = -sign;
  return sign;
}

inline bool compatible(const std::string& pauli, const std::string& setting) {
  for (int q = 0; q < tomo_qubits; ++q)
    if (pauli[q] != 'I' && pauli[q] != setting[q]) return false;
  return true;
}

/// <P> = sum_o sign(o) N_o / N, pooled over compatible settings. The error is
/// the Poisson propagation sqrt((1 - <P>^2) / N), i.e. independent Poisson
/// counts on the +1 and -1 outcomes.
inline Estimate expectation_from_counts(const TomographyData& data, const std::string& pauli) {
  if (pauli.size() != tomo_qubits) fail(ErrorCode::argument, "expectation: Pauli string must have three letters");
  if (pauli == "III") return {1.0, 0.0};
  double signed_sum = 0, total = 0;
  for (const auto& [setting, counts] : data.settings) {
    if (!compatible(pauli, setting)) continue;
    for (int o = 0; o < tomo_dim; ++o) {
      signed_sum += outcome_sign(pauli, o) * counts[o];
      total += counts[o];
    }
  }
  if (!(total > 0)) fail(ErrorCode::insufficient_data, "expectation: no counts for " + pauli);
  const double e = signed_sum / total;
  return {e, std::sqrt(std::max(0.0, 1 - e * e) / total)};
}

inline std::map<std::string, double> expectations_from_counts(const TomographyData& data) {
  for (const auto& s : pauli_settings()) {
    auto it = data.settings.find(s);
    double n = 0;
    if (it != data.settings.end())
      for (double c : it->second) n += c;
    if (!(n > 0)) fail(ErrorCode::insufficient_data, "tomography: setting " + s + " has no counts");
  }
  std::map<std::string, double> out;
  for (const auto& p : pauli_strings()) out[p] = expectation_from_counts(data, p).value;
  return out;
}

inline std::map<std::string, double> expectations_of(const CMatrix& rho) {
  std::map<std::string, double> out;
  for (const auto& p : pauli_strings()) out[p] = (rho * pauli_operator(p)).trace().real();
  return out;
}

/// rho = (1/8) sum_P <P> P with <III> = 1.
inline CMatrix linear_inversion(const std::map<std::string, double>& expectations) {
  CMatrix rho = CMatrix::Identity(tomo_dim, tomo_dim);
  for (const auto& p : pauli_strings()) {
    if (p == "III") continue;
    auto it = expectations.find(p);
    if (it == expectations.end()) fail(ErrorCode::insufficient_data, "linear_inversion: missing expectation " + p);
    rho += it->second * pauli_operator(p);
  }
  return rho / tomo_dim;
}

inline CMatrix linear_inversion(const TomographyData& data) { return linear_inversion(expectations_from_counts(data)); }

/// <psi|rho|psi>, clamped to [0, 1].
inline double fidelity(const CMatrix& rho, const CVector& target) {
  const double f = (target.adjoint() * rho * target)(0, 0).real();
  if (f < 0.0 || f > 1.0) {
    log::debug("fidelity " + std::to_string(f) + " clamped to [0, 1]");
    return std::clamp(f, 0.0, 1.0);
  }
  return f;
}

inline CVector ghz_target(int sign, double phase = 0.0) {
  CVector v = CVector::Zero(tomo_dim);
  v(0) = 1 / std::sqrt(2.0);
  v(tomo_dim - 1) = static_cast<double>(sign) * std::polar(1.0, phase) / std::sqrt(2.0);
  return v;
}

struct PhaseFidelity {
  double value = 0.0;
  double phase = 0.0;  // radians in (-pi, pi]
};

/// Maximizes the fidelity to (|000> + sign e^{i phase} |111>)/sqrt2 over the
/// phase: value = (rho_000,000 + rho_111,111)/2 + |rho_000,111| and
/// phase = arg(sign * rho_111,000). A vanishing coherence gives phase 0.
inline PhaseFidelity phase_optimized_fidelity(const CMatrix& rho, int sign) {
  const cplx c = rho(tomo_dim - 1, 0);
  PhaseFidelity out;
  out.value = std::clamp((rho(0, 0).real() + rho(tomo_dim - 1, tomo_dim - 1).real()) / 2 + std::abs(c), 0.0, 1.0);
  if (std::abs(c) > 1e-12) {
    out.phase = std::arg(static_cast<double>(sign) * c);
    if (out.phase <= -pi) out.phase += 2 * pi;
    if (out.phase == 0.0) out.phase = 0.0;  // no -0 in reports
  }
  return out;
}

enum class WitnessErrors {
  same_setting_zz,  // Z1Z2, Z2Z3, Z1Z3 from the same shots: correlated
  independent,      // plain quadrature
};

/// W = 3/2 - <XXX> - (<Z1Z2> + <Z2Z3> + <Z1Z3>)/2.
///
/// With same_setting_zz the three ZZ means come from one set of shots; for
/// +-1 outcomes a, b, c the covariance of ab and bc per shot is
/// <ac> - <ab><bc>, which sets their correlation coefficient.
inline Estimate witness(const Estimate& xxx, const Estimate& z12, const Estimate& z23, const Estimate& z13,
                        WitnessErrors model = WitnessErrors::same_setting_zz) {
  Estimate w;
  w.value = 1.5 - xxx.value - (z12.value + z23.value + z13.value) / 2;
  double var_zz = z12.error * z12.error + z23.error * z23.error + z13.error * z13.error;
  if (model == WitnessErrors::same_setting_zz) {
    auto corr = [](const Estimate& ab, const Estimate& bc, const Estimate& ac) {
      const double d = (1 - ab.value * ab.value) * (1 - bc.value * bc.value);
      return d > 0 ? std::clamp((ac.value - ab.value * bc.value) / std::sqrt(d), -1.0, 1.0) : 0.0;
    };
    var_zz += 2 * corr(z12, z23, z13) * z12.error * z23.error;
    var_zz += 2 * corr(z12, z13, z23) * z12.error * z13.error;
    var_zz += 2 * corr(z23, z13, z12) * z23.error * z13.error;
  }
  w.error = std::sqrt(xxx.error * xxx.error + var_zz / 4);
  return w;
}

/// sum_P c_P <P> with the delta-method Poisson error over all counts
/// (correlations between strings that share settings included).
inline Estimate linear_functional(const TomographyData& data, const std::map<std::string, double>& coeffs) {
  Estimate out;
  std::map<std::string, std::pair<double, double>> pooled;  // <P>, pooled total
  for (const auto& [p, c] : coeffs) {
    if (p == "III") {
      out.value += c;
      continue;
    }
    double total = 0;
    for (const auto& [s, counts] : data.settings)
      if (compatible(p, s))
        for (double n : counts) total += n;
    const double e = expectation_from_counts(data, p).value;
    pooled[p] = {e, total};
    out.value += c * e;
  }
  double var = 0;
  for (const auto& [s, counts] : data.settings) {
    for (int o = 0; o < tomo_dim; ++o) {
      double grad = 0;
      for (const auto& [p, ep] : pooled)
        if (compatible(p, s)) grad += coeffs.at(p) * (outcome_sign(p, o) - ep.first) / ep.second;
      var += grad * grad * counts[o];
    }
  }
  out.error = std::sqrt(var);
  return out;
}

/// Pauli coefficients of <psi|.|psi>: F = sum_P (<psi|P|psi>/8) <P>.
inline std::map<std::string, double> fidelity_coefficients(const CVector& target) {
  std::map<std::string, double> out;
  for (const auto& p : pauli_strings()) {
    const double c = (target.adjoint() * pauli_operator(p) * target)(0, 0).real() / tomo_dim;
    if (std::abs(c) > 1e-14) out[p] = c;
  }
  return out;
}

struct MleOptions {
  int max_iterations = 10000;
  double tolerance = 1e-10;  // on the log-likelihood improvement per count
  double dilution = 1.0;     // initial epsilon
};

struct MleResult {
  CMatrix rho;
  int iterations = 0;
  bool converged = false;
  double log_likelihood = 0.0;
};

/// Diluted R rho R iteration: rho <- (I + eps R) rho (I + eps R) / tr, with
/// R = (1/N) sum N_so Pi_so / p_so. eps is halved whenever a step would lower
/// the likelihood.
inline MleResult mle_reconstruct(const TomographyData& data, const MleOptions& opt = {}) {
  struct Term {
    CMatrix pi;
    double n;
  };
  std::vector<Term> terms;
  double total = 0;
  for (const auto& s : pauli_settings()) {
    auto it = data.settings.find(s);
    double ns = 0;
    if (it != data.settings.end())
      for (double c : it->second) ns += c;
    if (!(ns > 0)) fail(ErrorCode::insufficient_data, "mle: setting " + s + " has no counts");
    for (int o = 0; o < tomo_dim; ++o) {
      if (it->second[o] < 0) fail(ErrorCode::validation, "mle: negative count");
      if (it->second[o] > 0) terms.push_back({projector(s, o), it->second[o]});
    }
    total += ns;
  }
  auto loglik = [&](const CMatrix& rho) {
    double l = 0;
    for (const auto& t : terms) {
      const double p = (t.pi * rho).trace().real();
      l += t.n * std::log(std::max(p, 1e-300));
    }
    return l / total;
  };
  auto gradient = [&](const CMatrix& rho) {
    CMatrix r = CMatrix::Zero(tomo_dim, tomo_dim);
    for (const auto& t : terms) r += (t.n / std::max((t.pi * rho).trace().real(), 1e-300)) * t.pi;
    return CMatrix(r / total);
  };

  MleResult res;
  res.rho = CMatrix::Identity(tomo_dim, tomo_dim) / tomo_dim;
  double l = loglik(res.rho);
  double eps = opt.dilution;
  const CMatrix id = CMatrix::Identity(tomo_dim, tomo_dim);
  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    const CMatrix r = gradient(res.rho);
    CMatrix next;
    double ln = 0;
    for (int tries = 0; tries < 60; ++tries) {
      const CMatrix a = id + eps * r;
      next = a * res.rho * a.adjoint();
      next = (next + next.adjoint()) / 2;
      next /= next.trace().real();
      ln = loglik(next);
      if (ln >= l - 1e-15) break;
      eps /= 2;
    }
    const double gain = ln - l;
    res.rho = next;
    l = ln;
    if (gain < opt.tolerance) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }
  res.log_likelihood = l;
  if (!res.converged)
    log::warn("mle: no convergence after " + std::to_string(res.iterations) + " iterations (log-likelihood " +
              std::to_string(l) + ", step " + std::to_string(eps) + ")");
  return res;
}

/// Multinomial resampling of every setting, seeded per resample.
inline TomographyData resample(const TomographyData& data, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TomographyData out = data;
  for (auto& [s, counts] : out.settings) {
    double n = 0;
    for (double c : counts) n += c;
    std::discrete_distribution<int> pick(counts.begin(), counts.end());
    OutcomeCounts fresh{};
    const auto draws = static_cast<long long>(std::llround(n));
    for (long long k = 0; k < draws; ++k) fresh[pick(rng)] += 1;
    counts = fresh;
  }
  return out;
}

enum class Reconstruction { mle, linear };

struct TomographyOptions {
  Reconstruction algorithm = Reconstruction::mle;
  MleOptions mle;
  int bootstrap = 0;  // resamples; 0 disables
  std::uint64_t seed = 1;
  int threads = 1;
  WitnessErrors witness_errors = WitnessErrors::same_setting_zz;
};

struct TomographyResult {
  CMatrix rho;
  Estimate fidelity_plus, fidelity_minus;
  PhaseFidelity phase_plus, phase_minus;
  Estimate witness;
  double total_counts = 0;
  Estimate rate;
  int mle_iterations = 0;
  bool mle_converged = true;
  Estimate bootstrap_fidelity_plus, bootstrap_fidelity_minus;  // std over resamples, when enabled
};

inline CMatrix reconstruct(const TomographyData& data, const TomographyOptions& opt, int* iterations = nullptr,
                           bool* converged = nullptr) {
  if (opt.algorithm == Reconstruction::linear) return linear_inversion(data);
  const auto r = mle_reconstruct(data, opt.mle);
  if (iterations) *iterations = r.iterations;
  if (converged) *converged = r.converged;
  return r.rho;
}

/// Reconstruction, fidelities to GHZ+/-, phase-optimized fidelities and the
/// witness. Fidelity errors use the delta method on the linear estimator.
inline TomographyResult analyze(const TomographyData& data, const TomographyOptions& opt = {}) {
  TomographyResult res;
  res.rho = reconstruct(data, opt, &res.mle_iterations, &res.mle_converged);
  res.fidelity_plus = {fidelity(res.rho, ghz_target(+1)), linear_functional(data, fidelity_coefficients(ghz_target(+1))).error};
  res.fidelity_minus = {fidelity(res.rho, ghz_target(-1)), linear_functional(data, fidelity_coefficients(ghz_target(-1))).error};
  res.phase_plus = phase_optimized_fidelity(res.rho, +1);
  res.phase_minus = phase_optimized_fidelity(res.rho, -1);
  res.witness = witness(expectation_from_counts(data, "XXX"), expectation_from_counts(data, "ZZI"),
                        expectation_from_counts(data, "IZZ"), expectation_from_counts(data, "ZIZ"), opt.witness_errors);
  res.total_counts = data.total();
  if (data.duration > 0) res.rate = {res.total_counts / data.duration, std::sqrt(res.total_counts) / data.duration};

  if (opt.bootstrap > 0) {
    std::vector<double> fp(opt.bootstrap), fm(opt.bootstrap);
    const int threads = std::max(1, opt.threads);
    auto work = [&](int t) {
      for (int b = t; b < opt.bootstrap; b += threads) {
        std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                          static_cast<std::uint32_t>(b)};
        std::array<std::uint32_t, 2> words{};
        seq.generate(words.begin(), words.end());
        const std::uint64_t s = (std::uint64_t{words[0]} << 32) | words[1];
        const CMatrix rho = reconstruct(resample(data, s), opt);
        fp[b] = fidelity(rho, ghz_target(+1));
        fm[b] = fidelity(rho, ghz_target(-1));
      }
    };
    std::vector<std::exception_ptr> errors(threads);
    auto guarded = [&](int t) {
      try {
        work(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(guarded, t);
    guarded(0);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    auto stats = [](const std::vector<double>& v) {
      double m = 0;
      for (double x : v) m += x;
      m /= v.size();
      double s = 0;
      for (double x : v) s += (x - m) * (x - m);
      return Estimate{m, v.size() > 1 ? std::sqrt(s / (v.size() - 1)) : 0.0};
    };
    res.bootstrap_fidelity_plus = stats(fp);
    res.bootstrap_fidelity_minus = stats(fm);
  }
  return res;
}

}  // namespace hghz
