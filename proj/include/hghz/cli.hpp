#pragma once

// Command-line front end. run() is the whole tool; tools/hghz.cpp only
// forwards argv. Results go to files in the output directory plus a JSON
// summary on standard output; diagnostics and errors go to standard error.

#include "hghz/config.hpp"
#include "hghz/counts_io.hpp"
#include "hghz/detection.hpp"
#include "hghz/error.hpp"
#include "hghz/json_util.hpp"
#include "hghz/log.hpp"
#include "hghz/rates.hpp"
#include "hghz/sampling.hpp"
#include "hghz/source.hpp"
#include "hghz/tomography.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hghz::cli {

inline constexpr const char* tool_version = "0.1.0";

using nlohmann::json;
namespace fs = std::filesystem;
namespace js = hghz::json;

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorCode::io, "sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

inline std::string file_sha256(const std::string& path) { return sha256_hex(js::read_file(path)); }

// %.12g keeps tables readable; JSON carries full precision.
inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline json matrix_json(const CMatrix& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json a = json::array(), b = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      a.push_back(m(r, c).real());
      b.push_back(m(r, c).imag());
    }
    re.push_back(a);
    im.push_back(b);
  }
  return {{"real", re}, {"imag", im}};
}

inline json estimate_json(const Estimate& e) { return {{"value", e.value}, {"error", e.error}}; }

struct Options {
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int threads = 1;
  std::string circuit;       // herald-table
  std::string expectations;  // witness
  std::string budget;        // rates
  std::string input;         // count
  std::uint64_t triggers = 0;
  bool strict = false;
  std::string counts;        // tomo
  double duration = 0.0;
};

/// Artifacts of one command: outputs are written on commit() together with
/// a manifest; a manifest marked incomplete precedes them.
class Run {
 public:
  Run(const Options& o, fs::path dir) : opt_(o), dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorCode::io, "cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  void input(const std::string& role, const std::string& path) {
    inputs_.push_back({{"role", role}, {"path", path}, {"sha256", file_sha256(path)}});
  }

  void output(const std::string& name, const std::string& bytes) { outputs_.emplace_back(name, bytes); }

  /// Streams a large output directly to disk.
  std::ofstream stream(const std::string& name) {
    write_manifest(false);
    streamed_.push_back(name);
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) fail(ErrorCode::io, "cannot write '" + (dir_ / name).string() + "'");
    return f;
  }

  void commit() {
    write_manifest(false);
    for (const auto& [name, bytes] : outputs_) write_file(name, bytes);
    write_manifest(true);
  }

 private:
  void write_file(const std::string& name, const std::string& bytes) {
    std::ofstream f(dir_ / name, std::ios::binary);
    f << bytes;
    if (!f) fail(ErrorCode::io, "cannot write '" + (dir_ / name).string() + "'");
  }

  void write_manifest(bool complete) {
    json outs = json::array();
    if (complete) {
      std::vector<std::string> names = streamed_;
      for (const auto& [name, bytes] : outputs_) names.push_back(name);
      std::sort(names.begin(), names.end());
      for (const auto& n : names) outs.push_back({{"path", n}, {"sha256", file_sha256((dir_ / n).string())}});
    }
    json m = {{"tool", "hghz"},
              {"version", tool_version},
              {"command", opt_.command},
              {"seed", opt_.seed},
              {"inputs", inputs_},
              {"outputs", outs},
              {"complete", complete}};
    write_file("manifest.json", m.dump(2) + "\n");
  }

  Options opt_;
  fs::path dir_;
  json inputs_ = json::array();
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::vector<std::string> streamed_;
};

inline RunConfig load(const Options& o, Run* run, const std::optional<std::string>& circuit_override = {}) {
  json j = json::object();
  std::string base;
  if (!o.config_path.empty()) {
    j = js::parse_file(o.config_path);
    base = fs::path(o.config_path).parent_path().string();
    if (run) run->input("config", o.config_path);
  }
  if (circuit_override) {
    std::string c = *circuit_override;
    if (c != "reference") {
      if (run) run->input("circuit", c);
      c = fs::absolute(c).string();
    }
    if (!j.is_object()) js::schema_error("", "expected an object");
    j["circuit"] = c;
  } else if (run && j.is_object() && j.contains("circuit") && j.at("circuit").is_string() && j.at("circuit") != "reference") {
    fs::path p(j.at("circuit").get<std::string>());
    if (p.is_relative() && !base.empty()) p = fs::path(base) / p;
    if (fs::exists(p)) run->input("circuit", p.string());
  }
  try {
    auto cfg = config_from_json(j, base);
    if (o.seed_given) cfg.tomography.seed = o.seed;
    cfg.tomography.threads = o.threads;
    return cfg;
  } catch (const Error& e) {
    if (o.config_path.empty() || e.code() == ErrorCode::io) throw;
    fail(e.code(), o.config_path + ": " + e.what());
  }
}

inline fs::path out_dir(const Options& o, const RunConfig& cfg) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (!cfg.output_directory.empty()) return cfg.output_directory;
  return "hghz-out";
}

inline json group_json(const HeraldedState& g, bool with_rho) {
  json pats = json::object();
  for (const auto& [p, prob] : g.pattern_probability)
    pats[p] = {{"probability", prob}, {"fidelity", g.pattern_fidelity.at(p)}};
  json j = {{"name", g.group},
            {"sign", g.sign},
            {"in_sector_probability", g.in_sector_probability},
            {"herald_probability", g.herald_probability},
            {"sector_weight", g.sector_weight},
            {"fidelity", g.fidelity},
            {"patterns", pats}};
  if (with_rho && g.rho.size()) {
    const auto ph = phase_optimized_fidelity(g.rho, g.sign);
    j["phase_fidelity"] = {{"value", ph.value}, {"phase", ph.phase}};
    j["rho"] = matrix_json(g.rho);
  }
  return j;
}

inline json cmd_herald_table(const Options& o) {
  auto cfg = load(o, nullptr, o.circuit.empty() ? std::optional<std::string>{} : o.circuit);
  Run run(o, out_dir(o, cfg));
  load(o, &run, o.circuit.empty() ? std::optional<std::string>{} : o.circuit);
  HeraldAnalysis a;
  if (cfg.source) {
    a = herald_analysis(input_ensemble(*cfg.source, cfg.circuit), cfg.circuit, cfg.detectors, cfg.rule, cfg.max_singletons);
  } else {
    a = herald_table(cfg.circuit, cfg.detectors, cfg.rule).analysis;
  }
  std::ostringstream groups, patterns;
  groups << "group,sign,probability,herald_probability,fidelity\n";
  patterns << "group,pattern,probability,fidelity\n";
  json j = {{"circuit", cfg.circuit_source}, {"source", cfg.source ? "configured" : "ideal"}, {"groups", json::array()}};
  double total = 0, total_herald = 0;
  for (const auto& g : a.groups) {
    groups << g.group << ',' << (g.sign > 0 ? "+1" : "-1") << ',' << num(g.in_sector_probability) << ','
           << num(g.herald_probability) << ',' << num(g.fidelity) << '\n';
    for (const auto& [p, prob] : g.pattern_probability)
      patterns << g.group << ',' << p << ',' << num(prob) << ',' << num(g.pattern_fidelity.at(p)) << '\n';
    j["groups"].push_back(group_json(g, false));
    total += g.in_sector_probability;
    total_herald += g.herald_probability;
  }
  j["total_probability"] = total;
  j["total_herald_probability"] = total_herald;
  j["neglected_probability"] = a.neglected_probability;
  run.output("herald_table.csv", groups.str());
  run.output("herald_patterns.csv", patterns.str());
  run.output("herald_table.json", j.dump(2) + "\n");
  run.commit();
  return j;
}

inline json source_json(const SourcePhysicsParams& p) {
  json m = json::array();
  for (Eigen::Index r = 0; r < p.indistinguishability.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < p.indistinguishability.cols(); ++c) row.push_back(p.indistinguishability(r, c));
    m.push_back(row);
  }
  return {{"indistinguishability", m}, {"p2", p.impurity}, {"g2", g2_from_p2(p.impurity)}, {"input_efficiency", p.channel_efficiency}};
}

inline json cmd_simulate(const Options& o) {
  auto cfg = load(o, nullptr);
  Run run(o, out_dir(o, cfg));
  load(o, &run);
  const auto params = cfg.source_or_ideal();
  const auto a = herald_analysis(input_ensemble(params, cfg.circuit), cfg.circuit, cfg.detectors, cfg.rule, cfg.max_singletons);
  json j = {{"circuit", cfg.circuit_source},
            {"source", source_json(params)},
            {"max_singletons", cfg.max_singletons},
            {"neglected_probability", a.neglected_probability},
            {"trigger_rate_hz", cfg.trigger_rate},
            {"groups", json::array()}};
  for (const auto& g : a.groups) {
    auto gj = group_json(g, true);
    gj["accepted_rate_hz"] = cfg.trigger_rate * g.in_sector_probability;
    j["groups"].push_back(gj);
  }
  run.output("simulate.json", j.dump(2) + "\n");
  run.commit();
  for (auto& g : j["groups"]) g.erase("rho");
  return j;
}

inline json cmd_sample(const Options& o) {
  auto cfg = load(o, nullptr);
  Run run(o, out_dir(o, cfg));
  load(o, &run);
  const auto params = cfg.source_or_ideal();
  const auto ens = input_ensemble(params, cfg.circuit);
  log::info("sample: resolving click distributions for 27 settings");
  const auto dists = setting_distributions(ens, cfg.circuit, cfg.detectors, cfg.max_singletons, o.threads);
  const SamplerOptions so{cfg.trigger_rate, cfg.duration_per_setting, o.seed};
  SampleSummary summary;
  {
    auto f = run.stream("clicks.csv");
    f << click_header << '\n';
    summary = sample_clicks(dists, so, [&](const ClickRecord& r) {
      f << r.trigger_id << ',' << r.detector_id << ',' << r.setting << '\n';
    });
    if (!f) fail(ErrorCode::io, "write failed for clicks.csv");
  }
  const PatternFilter filter{cfg.detectors, cfg.rule};
  json expected = json::object();
  for (const auto& g : cfg.rule.groups) {
    const auto d = expected_tomography_data(dists, filter, g.name, static_cast<double>(so.triggers_per_setting()));
    expected[g.name] = d.total() / static_cast<double>(d.settings.size());
  }
  json j = {{"seed", o.seed},
            {"trigger_rate_hz", cfg.trigger_rate},
            {"duration_per_setting_s", cfg.duration_per_setting},
            {"triggers_per_setting", so.triggers_per_setting()},
            {"triggers", summary.triggers},
            {"unresolved_triggers", summary.unresolved},
            {"records", summary.records},
            {"expected_accepted_per_setting", expected},
            {"source", source_json(params)},
            {"max_singletons", cfg.max_singletons}};
  run.output("sample.json", j.dump(2) + "\n");
  run.commit();
  return j;
}

inline json cmd_count(const Options& o) {
  if (o.input.empty()) fail(ErrorCode::argument, "count: --input is required");
  auto cfg = load(o, nullptr);
  Run run(o, out_dir(o, cfg));
  load(o, &run);
  run.input("clicks", o.input);
  std::ifstream in(o.input, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + o.input + "'");
  CoincidenceCounter counter(PatternFilter{cfg.detectors, cfg.rule});
  const auto rejects = for_each_click_record(in, cfg.detectors.detector_count(),
                                             [&](const ClickRecord& r) { counter.add(r); }, {.strict = o.strict});
  auto res = counter.finish(o.triggers);
  res.diagnostics.rejected_lines = rejects.size();
  for (const auto& r : rejects) log::warn(r.message);
  std::ostringstream csv;
  write_counts_csv(csv, res.table);
  json j = res.diagnostics.to_json();
  json listed = json::array();
  for (std::size_t k = 0; k < rejects.size() && k < 100; ++k) listed.push_back({{"line", rejects[k].line}, {"message", rejects[k].message}});
  j["rejects"] = listed;
  run.output("counts.csv", csv.str());
  run.output("diagnostics.json", j.dump(2) + "\n");
  run.commit();
  return j;
}

inline json cmd_tomo(const Options& o) {
  if (o.counts.empty()) fail(ErrorCode::argument, "tomo: --counts is required");
  auto cfg = load(o, nullptr);
  Run run(o, out_dir(o, cfg));
  load(o, &run);
  run.input("counts", o.counts);
  std::ifstream in(o.counts, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + o.counts + "'");
  const auto table = read_counts_csv(in);
  const double duration = o.duration > 0 ? o.duration : cfg.duration_per_setting * 27;
  auto groups = cfg.tomography_groups;
  if (groups.empty())
    for (const auto& g : cfg.rule.groups) groups.push_back(g.name);
  json j = {{"algorithm", cfg.tomography.algorithm == Reconstruction::mle ? "mle" : "linear"},
            {"duration_s", duration},
            {"groups", json::array()}};
  for (const auto& name : groups) {
    const auto data = tomography_data(table, cfg.rule, name, duration);
    const auto r = analyze(data, cfg.tomography);
    int sign = +1;
    for (const auto& g : cfg.rule.groups)
      if (g.name == name) sign = g.sign;
    const auto& f = sign > 0 ? r.fidelity_plus : r.fidelity_minus;
    const auto& ph = sign > 0 ? r.phase_plus : r.phase_minus;
    json e = json::object();
    for (const char* p : {"XXX", "ZZI", "IZZ", "ZIZ"}) e[p] = estimate_json(expectation_from_counts(data, p));
    // the witness targets (|000> + sign |111>)/sqrt2: flip <XXX> for sign -1
    Estimate xxx = expectation_from_counts(data, "XXX");
    xxx.value *= sign;
    const auto w = witness(xxx, expectation_from_counts(data, "ZZI"), expectation_from_counts(data, "IZZ"),
                           expectation_from_counts(data, "ZIZ"), cfg.tomography.witness_errors);
    json g = {{"name", name},
              {"sign", sign},
              {"counts", r.total_counts},
              {"rate_hz", estimate_json(r.rate)},
              {"fidelity", estimate_json(f)},
              {"fidelity_plus", estimate_json(r.fidelity_plus)},
              {"fidelity_minus", estimate_json(r.fidelity_minus)},
              {"phase_fidelity", {{"value", ph.value}, {"phase", ph.phase}}},
              {"witness", estimate_json(w)},
              {"expectations", e},
              {"rho", matrix_json(r.rho)}};
    if (cfg.tomography.algorithm == Reconstruction::mle)
      g["mle"] = {{"iterations", r.mle_iterations}, {"converged", r.mle_converged}};
    if (cfg.tomography.bootstrap > 0)
      g["bootstrap"] = {{"resamples", cfg.tomography.bootstrap},
                        {"seed", cfg.tomography.seed},
                        {"fidelity", estimate_json(sign > 0 ? r.bootstrap_fidelity_plus : r.bootstrap_fidelity_minus)}};
    j["groups"].push_back(g);
  }
  run.output("tomo.json", j.dump(2) + "\n");
  run.commit();
  for (auto& g : j["groups"]) g.erase("rho");
  return j;
}

inline Estimate expectation_entry(const json& j, const std::string& key) {
  const std::string ptr = "/" + key;
  const auto& v = js::member(j, "", key);
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array()) {
    if (v.size() != 2) js::schema_error(ptr, "expected [value, error]");
    return {js::number(v[0], ptr + "/0"), js::number(v[1], ptr + "/1")};
  }
  js::check_keys(v, ptr, {"value", "error"});
  Estimate e{js::number(js::member(v, ptr, "value"), ptr + "/value"), 0.0};
  if (v.contains("error")) e.error = js::number(v.at("error"), ptr + "/error");
  return e;
}

inline json cmd_witness(const Options& o) {
  if (o.expectations.empty()) fail(ErrorCode::argument, "witness: --expectations is required");
  auto cfg = load(o, nullptr);
  const auto doc = js::parse_file(o.expectations);
  Estimate xxx, z12, z23, z13;
  try {
    js::check_keys(doc, "", {"XXX", "ZZI", "IZZ", "ZIZ"});
    xxx = expectation_entry(doc, "XXX");
    z12 = expectation_entry(doc, "ZZI");
    z23 = expectation_entry(doc, "IZZ");
    z13 = expectation_entry(doc, "ZIZ");
    for (const auto* e : {&xxx, &z12, &z23, &z13})
      if (!(std::abs(e->value) <= 1.0) || !(e->error >= 0.0))
        js::schema_error("", "expectations must lie in [-1, 1] with non-negative errors");
  } catch (const Error& e) {
    fail(e.code(), o.expectations + ": " + e.what());
  }
  Run run(o, out_dir(o, cfg));
  load(o, &run);
  run.input("expectations", o.expectations);
  const auto w = witness(xxx, z12, z23, z13, cfg.tomography.witness_errors);
  const auto wi = witness(xxx, z12, z23, z13, WitnessErrors::independent);
  const auto wc = witness(xxx, z12, z23, z13, WitnessErrors::same_setting_zz);
  json j = {{"witness", estimate_json(w)},
            {"error_model", cfg.tomography.witness_errors == WitnessErrors::independent ? "independent" : "same_setting_zz"},
            {"error_same_setting_zz", wc.error},
            {"error_independent", wi.error},
            {"entangled", w.value < 0}};
  run.output("witness.json", j.dump(2) + "\n");
  run.commit();
  return j;
}

inline json cmd_rates(const Options& o) {
  auto cfg = load(o, nullptr);
  Run run(o, out_dir(o, cfg));
  load(o, &run);
  if (!o.budget.empty()) {
    run.input("budget", o.budget);
    try {
      cfg.budget = budget_from_json(js::parse_file(o.budget), "");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::io) throw;
      fail(e.code(), o.budget + ": " + e.what());
    }
  }
  const double rate = expected_rate(cfg.budget);
  std::ostringstream table;
  table << "heralded rate budget\n  base rate            " << num(cfg.budget.base_rate) << " Hz\n";
  json factors = json::array();
  for (const auto& f : cfg.budget.factors) {
    table << "  " << f.label << std::string(f.label.size() < 20 ? 21 - f.label.size() : 1, ' ') << num(f.efficiency) << " ^ "
          << f.multiplicity << '\n';
    factors.push_back({{"label", f.label}, {"efficiency", f.efficiency}, {"multiplicity", f.multiplicity}});
  }
  const auto& sp = cfg.budget.success_probability;
  table << "  success probability  " << sp.num << '/' << sp.den << "\n  expected rate        " << num(rate) << " Hz\n\n";

  json nfold = json::array();
  table << "n-fold rates (per-photon efficiency " << num(cfg.per_photon_efficiency) << ")\n";
  for (int n = 1; n <= 8; ++n) {
    const double r = nfold_rate(cfg.demux, cfg.per_photon_efficiency, n);
    nfold.push_back({{"n", n}, {"rate_hz", r}});
    table << "  n=" << n << "  " << num(r) << " Hz\n";
  }
  json fits = json::object();
  if (cfg.anchors.size() >= 2) {
    for (auto [mode, name] : {std::pair{FitMode::ratio, "ratio"}, std::pair{FitMode::absolute, "absolute"}}) {
      const auto fit = fit_efficiency(cfg.demux, cfg.anchors, mode);
      json pts = json::array();
      table << '\n' << name << " fit: per-photon efficiency " << num(fit.efficiency) << '\n';
      for (std::size_t k = 0; k < cfg.anchors.size(); ++k) {
        pts.push_back({{"n", cfg.anchors[k].n},
                       {"measured_hz", cfg.anchors[k].rate},
                       {"predicted_hz", fit.predicted[k]},
                       {"residual_hz", fit.residuals[k]}});
        table << "  n=" << cfg.anchors[k].n << "  measured " << num(cfg.anchors[k].rate) << "  predicted "
              << num(fit.predicted[k]) << "  residual " << num(fit.residuals[k]) << '\n';
      }
      json series = json::array();
      table << "  series:";
      for (int n = 1; n <= 8; ++n) {
        const double r = nfold_rate(cfg.demux, fit.efficiency, n);
        series.push_back({{"n", n}, {"rate_hz", r}});
        table << ' ' << num(r);
      }
      table << '\n';
      fits[name] = {{"efficiency", fit.efficiency}, {"anchors", pts}, {"nfold", series}};
    }
  }
  json j = {{"expected_rate_hz", rate},
            {"budget",
             {{"base_rate_hz", cfg.budget.base_rate},
              {"factors", factors},
              {"success_probability", std::to_string(sp.num) + "/" + std::to_string(sp.den)}}},
            {"demux", {{"repetition_rate_hz", cfg.demux.repetition_rate}, {"outputs", cfg.demux.outputs()}, {"transmission", cfg.demux.transmission()}}},
            {"nfold", nfold},
            {"fits", fits}};
  run.output("rates.json", j.dump(2) + "\n");
  run.output("rates.txt", table.str());
  run.commit();
  return j;
}

inline json cmd_hom(const Options& o) {
  auto cfg = load(o, nullptr);
  Run run(o, out_dir(o, cfg));
  load(o, &run);
  const auto params = cfg.source_or_ideal();
  json pairs = json::array();
  for (int a = 0; a < params.channels(); ++a)
    for (int b = a + 1; b < params.channels(); ++b) {
      const double c = hom_coincidence(params, a, b);
      pairs.push_back({{"photons", {a, b}},
                       {"indistinguishability", params.indistinguishability(a, b)},
                       {"coincidence", c},
                       {"visibility", 1.0 - 2.0 * c}});
    }
  json j = {{"pairs", pairs}, {"g2", g2_from_p2(params.impurity)}, {"p2", params.impurity}};
  run.output("hom.json", j.dump(2) + "\n");
  run.commit();
  return j;
}

inline void report_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

/// Parses argv and runs one command; returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Heralded GHZ simulation and analysis", "hghz"};
  app.set_version_flag("--version", tool_version);
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", o.out_dir, "output directory");
  app.add_option("--seed", o.seed, "random seed")->each([&](const std::string&) { o.seed_given = true; });
  app.add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1, 256));

  auto* herald = app.add_subcommand("herald-table", "herald patterns, probabilities and fidelities");
  herald->add_option("--circuit", o.circuit, "\"reference\" or a circuit file");
  app.add_subcommand("simulate", "heralded signal states for the configured source");
  app.add_subcommand("sample", "synthetic click records for all 27 settings");
  auto* count = app.add_subcommand("count", "six-fold coincidence counting");
  count->add_option("--input", o.input, "click-record CSV")->required()->check(CLI::ExistingFile);
  count->add_option("--triggers", o.triggers, "total triggers, including ones without clicks");
  count->add_flag("--strict", o.strict, "fail on the first malformed line");
  auto* tomo = app.add_subcommand("tomo", "state reconstruction, fidelities and witness");
  tomo->add_option("--counts", o.counts, "counts table CSV")->required()->check(CLI::ExistingFile);
  tomo->add_option("--duration", o.duration, "total acquisition time in seconds");
  auto* wit = app.add_subcommand("witness", "entanglement witness from four expectation values");
  wit->add_option("--expectations", o.expectations, "JSON with XXX, ZZI, IZZ, ZIZ")->required()->check(CLI::ExistingFile);
  auto* rates = app.add_subcommand("rates", "rate budget and n-fold rates");
  rates->add_option("--budget", o.budget, "budget JSON")->check(CLI::ExistingFile);
  app.add_subcommand("hom", "two-photon interference on a balanced beam splitter");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, code_name(ErrorCode::argument), e.what());
    return exit_status(ErrorCode::argument);
  }
  o.command = app.get_subcommands().front()->get_name();

  try {
    json result;
    if (o.command == "herald-table") result = cmd_herald_table(o);
    else if (o.command == "simulate") result = cmd_simulate(o);
    else if (o.command == "sample") result = cmd_sample(o);
    else if (o.command == "count") result = cmd_count(o);
    else if (o.command == "tomo") result = cmd_tomo(o);
    else if (o.command == "witness") result = cmd_witness(o);
    else if (o.command == "rates") result = cmd_rates(o);
    else if (o.command == "hom") result = cmd_hom(o);
    out << result.dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    report_error(err, code_name(e.code()), e.what());
    return exit_status(e.code());
  } catch (const std::exception& e) {
    report_error(err, "internal_error", e.what());
    return 1;
  }
}

}  // namespace hghz::cli
