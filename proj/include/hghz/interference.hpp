#pragma once

// Multiphoton interference of partially distinguishable photons.
//
// Photon j enters as external vector e_j and internal state phi_j; after the
// interferometer its external amplitudes are v_j = U e_j. For two output
// configurations listed slot by slot, m = (m_1..m_n) and m' = (m'_1..m'_n),
// where slot r of both lists refers to the same detector location, the
// label-traced matrix element is
//
//   rho(m, m') = 1/sqrt(c! c'!) sum_{sigma, tau in S_n}
//                prod_r v_sigma(r)[m_r] conj(v_tau(r)[m'_r]) <phi_tau(r)|phi_sigma(r)>
//
// With m = m' it is the probability of the occupation c. The double sum is
// evaluated by dynamic programming over pairs of used-photon subsets.
//
// Photons whose internal state is orthogonal to every other photon
// ("singletons", e.g. impurity photons) are split off and folded in one slot
// at a time, which keeps the subset DP at the size of the interfering core.

#include "hghz/error.hpp"
#include "hghz/fock.hpp"
#include "hghz/linalg.hpp"
#include "hghz/permanent.hpp"
#include "hghz/source.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <memory>
#include <utility>
#include <vector>

namespace hghz {

using Slots = std::vector<int>;

inline Slots slots_of(const Occupation& occ) {
  Slots s;
  for (int m = 0; m < static_cast<int>(occ.size()); ++m)
    for (int k = 0; k < occ[m]; ++k) s.push_back(m);
  return s;
}

/// Calls f for every occupation of n photons over `modes` modes, in
/// lexicographic order.
inline void for_each_occupation(int modes, int n, const std::function<void(const Occupation&)>& f) {
  Occupation occ(modes, 0);
  std::function<void(int, int)> rec = [&](int m, int left) {
    if (m == modes - 1) {
      occ[m] = static_cast<std::uint8_t>(left);
      f(occ);
      occ[m] = 0;
      return;
    }
    for (int k = left; k >= 0; --k) {
      occ[m] = static_cast<std::uint8_t>(k);
      rec(m + 1, left - k);
    }
    occ[m] = 0;
  };
  if (modes == 0) {
    if (n == 0) f(occ);
    return;
  }
  rec(0, n);
}

/// Memoized core results, shareable between engines whose interfering core
/// photons are the same.
struct CoreCache {
  std::map<std::vector<std::pair<int, int>>, cplx> coherence;
  std::map<int, std::map<Occupation, double>> populations;  // keyed by coverage threshold
};

class Interference {
 public:
  static constexpr int max_core = 10;

  /// `u` acts on the 2 * n_spatial external modes.
  Interference(const std::vector<Photon>& photons, const CMatrix& u,
               std::shared_ptr<CoreCache> cache = std::make_shared<CoreCache>())
      : n_ext_(static_cast<int>(u.rows())), cache_(std::move(cache)) {
    if (u.cols() != u.rows()) fail(ErrorCode::dimension, "Interference: unitary must be square");
    if (!is_unitary(u, 1e-10)) fail(ErrorCode::validation, "Interference: matrix is not unitary");
    const int n = static_cast<int>(photons.size());
    for (const auto& p : photons)
      if (p.external.size() != n_ext_) fail(ErrorCode::dimension, "Interference: photon external vector length mismatch");

    std::vector<int> core, single;
    for (int j = 0; j < n; ++j) {
      bool isolated = true;
      for (int k = 0; k < n && isolated; ++k)
        if (k != j && std::abs(photons[j].internal.dot(photons[k].internal)) > 1e-13) isolated = false;
      (isolated && n > 1 ? single : core).push_back(j);
    }
    if (static_cast<int>(core.size()) > max_core)
      fail(ErrorCode::dimension, "Interference: more than " + std::to_string(max_core) + " mutually interfering photons");

    const int nc = static_cast<int>(core.size());
    amp_.resize(n_ext_, nc);
    gram_.resize(nc, nc);
    CMatrix overlap(nc, nc);
    for (int a = 0; a < nc; ++a) {
      amp_.col(a) = u * photons[core[a]].external;
      for (int b = 0; b < nc; ++b) {
        gram_(a, b) = photons[core[a]].internal.dot(photons[core[b]].internal);
        overlap(a, b) = photons[core[a]].external.dot(photons[core[b]].external) * gram_(a, b);
      }
    }
    identical_ = true;
    for (int a = 0; a < nc; ++a)
      for (int b = 0; b < nc; ++b)
        if (std::abs(gram_(a, b) - cplx{1.0}) > 1e-14) identical_ = false;
    norm_ = nc == 0 ? 1.0 : permanent(overlap).real();
    if (!(norm_ > 1e-300)) fail(ErrorCode::validation, "Interference: input state vanishes");

    for (int j : single) {
      CVector v = u * photons[j].external;
      if (v.norm() == 0.0) fail(ErrorCode::validation, "Interference: photon with zero amplitude");
      singles_.push_back(v / v.norm());
    }

    subsets_.assign(nc + 1, {});
    for (unsigned s = 0; s < (1u << nc); ++s) subsets_[std::popcount(s)].push_back(s);
  }

  int photon_number() const { return core_size() + singleton_count(); }
  int core_size() const { return static_cast<int>(amp_.cols()); }
  int singleton_count() const { return static_cast<int>(singles_.size()); }
  int n_external() const { return n_ext_; }

  /// Probability of the external occupation `occ`.
  double population(const Occupation& occ) const {
    check(occ);
    if (photon_count(occ) != photon_number()) return 0.0;
    const Slots s = slots_of(occ);
    return std::max(0.0, folded(s, s, 0, false).real());
  }

  /// rho(m, m') for slot-aligned configurations (see the header comment).
  cplx coherence(const Slots& m, const Slots& mp) const {
    if (m.size() != mp.size()) fail(ErrorCode::dimension, "coherence: slot lists differ in length");
    if (static_cast<int>(m.size()) != photon_number()) return 0.0;
    for (std::size_t r = 0; r < m.size(); ++r)
      if (m[r] < 0 || m[r] >= n_ext_ || mp[r] < 0 || mp[r] >= n_ext_)
        fail(ErrorCode::dimension, "coherence: slot mode out of range");
    return folded(m, mp, 0, true);
  }

  /// Every occupation with probability above `tol`. When `required` is given
  /// (a list of external-mode groups, typically the two polarizations of one
  /// spatial output), only occupations with at least one photon in every group
  /// are kept.
  std::map<Occupation, double> populations(const std::vector<std::vector<int>>& required = {},
                                           double tol = 1e-20) const {
    const int need = static_cast<int>(required.size());
    auto covered = [&](const Occupation& occ) {
      int c = 0;
      for (const auto& g : required) {
        bool hit = false;
        for (int m : g) hit = hit || occ[m] > 0;
        c += hit;
      }
      return c;
    };
    const int k = singleton_count();
    const int threshold = std::max(0, need - k);
    auto found = cache_->populations.find(threshold);
    if (found == cache_->populations.end()) {
      std::map<Occupation, double> core;
      for_each_occupation(n_ext_, core_size(), [&](const Occupation& occ) {
        if (covered(occ) < threshold) return;
        const Slots s = slots_of(occ);
        const double p = core_value(s, s).real();
        if (p > tol) core.emplace(occ, p);
      });
      found = cache_->populations.emplace(threshold, std::move(core)).first;
    }
    std::map<Occupation, double> dist = found->second;
    for (int i = 0; i < k; ++i) {
      std::map<Occupation, double> next;
      const int left = k - i - 1;
      for (const auto& [occ, p] : dist) {
        for (int o = 0; o < n_ext_; ++o) {
          const double w = std::norm(singles_[i](o));
          if (w <= 0.0) continue;
          Occupation out = occ;
          ++out[o];
          if (covered(out) < need - left) continue;
          next[out] += p * w;
        }
      }
      dist.swap(next);
      std::erase_if(dist, [tol](const auto& kv) { return kv.second <= tol; });
    }
    return dist;
  }

 private:
  void check(const Occupation& occ) const {
    if (static_cast<int>(occ.size()) != n_ext_)
      fail(ErrorCode::dimension, "Interference: occupation length does not match the external mode count");
  }

  static double slot_factorial(const Slots& s) {
    std::map<int, int> count;
    for (int m : s) ++count[m];
    double f = 1.0;
    for (const auto& [m, c] : count)
      for (int k = 2; k <= c; ++k) f *= k;
    return f;
  }

  // Folds singletons s_i, s_{i+1}, ... into the slot pairs, then evaluates the core.
  cplx folded(const Slots& m, const Slots& mp, int i, bool cache) const {
    if (i == singleton_count()) return cache ? cached_core(m, mp) : core_value(m, mp);
    const std::size_t n = m.size();
    cplx total{};
    const CVector& v = singles_[i];
    Slots rm(n - 1), rmp(n - 1);
    for (std::size_t r = 0; r < n; ++r) {
      // visit each distinct (m, m') pair once, at its first slot
      bool seen = false;
      int mult = 0, cm = 0, cmp = 0;
      for (std::size_t t = 0; t < n; ++t) {
        if (m[t] == m[r] && mp[t] == mp[r]) {
          if (t < r) seen = true;
          ++mult;
        }
        cm += m[t] == m[r];
        cmp += mp[t] == mp[r];
      }
      if (seen) continue;
      const cplx w = v(m[r]) * std::conj(v(mp[r]));
      if (w == cplx{}) continue;
      for (std::size_t t = 0, o = 0; t < n; ++t) {
        if (t == r) continue;
        rm[o] = m[t];
        rmp[o++] = mp[t];
      }
      total += (mult / std::sqrt(static_cast<double>(cm) * cmp)) * w * folded(rm, rmp, i + 1, cache);
    }
    return total;
  }

  cplx cached_core(const Slots& m, const Slots& mp) const {
    std::vector<std::pair<int, int>> key;
    for (std::size_t r = 0; r < m.size(); ++r) key.emplace_back(m[r], mp[r]);
    std::sort(key.begin(), key.end());
    auto& memo = cache_->coherence;
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const cplx v = core_value(m, mp);
    memo.emplace(std::move(key), v);
    return v;
  }

  cplx core_value(const Slots& m, const Slots& mp) const {
    const int n = core_size();
    if (static_cast<int>(m.size()) != n) return 0.0;
    if (n == 0) return 1.0;
    const double denom = std::sqrt(slot_factorial(m) * slot_factorial(mp)) * norm_;
    if (identical_) {
      CMatrix a(n, n), b(n, n);
      for (int r = 0; r < n; ++r) {
        a.row(r) = amp_.row(m[r]);
        b.row(r) = amp_.row(mp[r]);
      }
      return permanent(a) * std::conj(permanent(b)) / denom;
    }
    return subset_dp(m, mp) / denom;
  }

  cplx subset_dp(const Slots& m, const Slots& mp) const {
    const int n = core_size();
    const unsigned full = 1u << n;
    coeff_.resize(static_cast<std::size_t>(n) * n * n);
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < n; ++j) {
        const cplx a = amp_(m[r], j);
        for (int k = 0; k < n; ++k) coeff_[(r * n + j) * n + k] = a * std::conj(amp_(mp[r], k)) * gram_(k, j);
      }
    // only entries with |s| = |t| are ever read; clear each layer before use
    table_.resize(static_cast<std::size_t>(full) * full);
    table_[0] = 1.0;
    for (int r = 0; r < n; ++r) {
      for (unsigned s : subsets_[r + 1])
        for (unsigned t : subsets_[r + 1]) table_[static_cast<std::size_t>(s) * full + t] = cplx{};
      const cplx* c = &coeff_[static_cast<std::size_t>(r) * n * n];
      for (unsigned s : subsets_[r]) {
        for (unsigned t : subsets_[r]) {
          const cplx val = table_[static_cast<std::size_t>(s) * full + t];
          if (val == cplx{}) continue;
          for (int j = 0; j < n; ++j) {
            if (s & (1u << j)) continue;
            cplx* row = &table_[static_cast<std::size_t>(s | (1u << j)) * full];
            for (int k = 0; k < n; ++k) {
              if (t & (1u << k)) continue;
              row[t | (1u << k)] += val * c[j * n + k];
            }
          }
        }
      }
    }
    return table_[static_cast<std::size_t>(full - 1) * full + (full - 1)];
  }

  int n_ext_;
  CMatrix amp_;
  CMatrix gram_;
  bool identical_ = true;
  double norm_ = 1.0;
  std::vector<CVector> singles_;
  std::vector<std::vector<unsigned>> subsets_;
  mutable std::vector<cplx> coeff_;
  mutable std::vector<cplx> table_;
  std::shared_ptr<CoreCache> cache_;
};

}  // namespace hghz
