#include "hghz/sampling.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace hghz;

namespace {

struct Rig {
  Circuit circuit = reference_circuit();
  DetectorConfig cfg = DetectorConfig::reference();
  HeraldRule rule = HeraldRule::reference();
  PatternFilter filter() const { return {cfg, rule}; }
};

double total_of(const SettingDistribution& d) {
  double t = d.unresolved;
  for (const auto& [p, w] : d.patterns) t += w;
  return t;
}

}  // namespace

TEST(SettingCircuit, AppendsOneWaveplatePerRotatedQubit) {
  const Rig s;
  const auto c = setting_circuit(s.circuit, s.cfg, "XYZ");
  ASSERT_EQ(c.elements.size(), s.circuit.elements.size() + 2);
  EXPECT_EQ(c.elements[c.elements.size() - 2].kind, ElementKind::hwp);
  EXPECT_EQ(c.elements.back().kind, ElementKind::qwp);
  EXPECT_THROW(setting_circuit(s.circuit, s.cfg, "XY"), Error);
}

TEST(SettingCircuit, EigenstatesMapToHorizontal) {
  const double r = 1 / std::sqrt(2.0);
  const cplx i{0, 1};
  const CMatrix hwp = element_unitary(Element::hwp(0, pi / 8));
  const CMatrix qwp = element_unitary(Element::qwp(0, pi / 4));
  CVector plus(2), minus(2), plus_i(2), minus_i(2);
  plus << r, r;
  minus << r, -r;
  plus_i << r, i * r;
  minus_i << r, -i * r;
  EXPECT_NEAR(std::norm((hwp * plus)(0)), 1.0, 1e-15);
  EXPECT_NEAR(std::norm((hwp * minus)(1)), 1.0, 1e-15);
  EXPECT_NEAR(std::norm((qwp * plus_i)(0)), 1.0, 1e-15);
  EXPECT_NEAR(std::norm((qwp * minus_i)(1)), 1.0, 1e-15);
}

TEST(SettingDistribution, IdealSourcesReconstructGhzExactly) {
  const Rig s;
  const auto ens = input_ensemble(SourcePhysicsParams::ideal(6), s.circuit);
  const auto dists = setting_distributions(ens, s.circuit, s.cfg);
  for (const auto& d : dists) EXPECT_NEAR(total_of(d), 1.0, 1e-12);
  for (const auto& [group, sign] : {std::pair{"GHZ+", 1}, std::pair{"GHZ-", -1}}) {
    const auto data = expected_tomography_data(dists, s.filter(), group, 1.0);
    for (const auto& [setting, counts] : data.settings) {
      double n = 0;
      for (double c : counts) n += c;
      EXPECT_NEAR(n, 1.0 / 64, 1e-12) << setting;
    }
    const CMatrix rho = linear_inversion(data);
    EXPECT_NEAR(fidelity(rho, ghz_target(sign)), 1.0, 1e-10) << group;
  }
}

TEST(SettingDistribution, MatchesHeraldedStateWithoutExtraPhotons) {
  // six photons, every output occupied: accepted events are exactly the
  // signal sector, so populations in rotated bases must rebuild the
  // coherence-based heralded state
  Rig s;
  s.cfg = DetectorConfig::reference(0.85);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.75, 1.0);
  auto params = SourcePhysicsParams::uniform(6, 1.0);
  for (int a = 0; a < 6; ++a)
    for (int b = a + 1; b < 6; ++b) params.indistinguishability(a, b) = params.indistinguishability(b, a) = u(rng);
  try {
    internal_vectors(params.indistinguishability);
  } catch (const Error&) {
    params = SourcePhysicsParams::uniform(6, 0.9);
  }
  const auto ens = input_ensemble(params, s.circuit);
  const auto analysis = herald_analysis(ens, s.circuit, s.cfg, s.rule);
  const auto dists = setting_distributions(ens, s.circuit, s.cfg, -1, 2);
  for (std::size_t g = 0; g < 2; ++g) {
    const auto& hs = analysis.groups[g];
    const auto data = expected_tomography_data(dists, s.filter(), hs.group, 1.0);
    double zzz = 0;
    for (double c : data.settings.at("ZZZ")) zzz += c;
    EXPECT_NEAR(zzz, hs.in_sector_probability, 1e-12);
    EXPECT_LT((linear_inversion(data) - hs.rho).cwiseAbs().maxCoeff(), 1e-10) << hs.group;
  }
}

TEST(Sampler, SeededAndDeterministic) {
  const Rig s;
  const auto ens = input_ensemble(SourcePhysicsParams::uniform(6, 0.9), s.circuit);
  const auto dists = setting_distributions(ens, s.circuit, s.cfg);
  auto run = [&](std::uint64_t seed) {
    std::vector<ClickRecord> out;
    const auto sum = sample_clicks(dists, {100.0, 10.0, seed}, [&](const ClickRecord& r) { out.push_back(r); });
    EXPECT_EQ(sum.triggers, 27u * 1000u);
    EXPECT_EQ(sum.records, out.size());
    return out;
  };
  const auto a = run(5), b = run(5), c = run(6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Sampler, EveryTriggerClassifiedOnce) {
  Rig s;
  s.cfg = DetectorConfig::reference(0.85);
  const auto ens = input_ensemble(SourcePhysicsParams::uniform(6, 0.9), s.circuit);
  const auto dists = setting_distributions(ens, s.circuit, s.cfg);
  CoincidenceCounter counter(s.filter());
  const auto sum = sample_clicks(dists, {200.0, 10.0, 3}, [&](const ClickRecord& r) { counter.add(r); });
  const auto res = counter.finish(sum.triggers);
  EXPECT_EQ(res.diagnostics.triggers, sum.triggers);
  EXPECT_EQ(res.diagnostics.classified(), sum.triggers);
  EXPECT_EQ(res.table.total(), res.diagnostics.accepted);
  EXPECT_GE(res.diagnostics.wrong_multiplicity, sum.unresolved);
}

TEST(Sampler, ClosureErrorShrinksWithCounts) {
  const Rig s;
  const auto ens = input_ensemble(SourcePhysicsParams::uniform(6, 0.9), s.circuit);
  const auto dists = setting_distributions(ens, s.circuit, s.cfg);
  const CMatrix exact = linear_inversion(expected_tomography_data(dists, s.filter(), "GHZ+", 1.0));
  std::vector<double> distance;
  for (double triggers : {64.0 * 400, 64.0 * 6400}) {
    CoincidenceCounter counter(s.filter());
    const auto sum = sample_clicks(dists, {triggers, 1.0, 17}, [&](const ClickRecord& r) { counter.add(r); });
    const auto data = tomography_data(counter.finish(sum.triggers).table, s.rule, "GHZ+");
    const double per_setting = data.total() / 27;
    distance.push_back(trace_distance(linear_inversion(data), exact));
    EXPECT_LT(distance.back(), 3 / std::sqrt(per_setting)) << per_setting;
  }
  EXPECT_LT(distance[1], distance[0]);
}
