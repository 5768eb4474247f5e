#pragma once

// Click-record ingestion and six-fold coincidence counting.
//
// Input is CSV, one click per line: trigger_id,detector_id,setting_id, with an
// optional header line of exactly those names. Records of one trigger must be
// contiguous. Output tables are CSV with the columns
// setting,herald_pattern,ppnr_config,signal_outcome,counts sorted by key.

#include "hghz/detection.hpp"
#include "hghz/error.hpp"
#include "hghz/tomography.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <utility>
#include <vector>

namespace hghz {

struct ClickRecord {
  std::uint64_t trigger_id = 0;
  int detector_id = 0;
  std::string setting;

  friend bool operator==(const ClickRecord&, const ClickRecord&) = default;
};

inline constexpr std::string_view click_header = "trigger_id,detector_id,setting_id";

struct LineReject {
  std::size_t line = 0;
  std::string message;
};

struct ParseOptions {
  bool strict = true;  // throw on the first bad line instead of collecting rejects
};

namespace detail {

inline std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

// Splits "a,b,c" into three fields; false on any other field count.
inline bool split3(std::string_view s, std::string_view out[3]) {
  for (int k = 0; k < 2; ++k) {
    const auto comma = s.find(',');
    if (comma == std::string_view::npos) return false;
    out[k] = s.substr(0, comma);
    s.remove_prefix(comma + 1);
  }
  if (s.find(',') != std::string_view::npos) return false;
  out[2] = s;
  return true;
}

template <class T>
bool parse_int(std::string_view s, T& value) {
  if (s.empty()) return false;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && end == s.data() + s.size();
}

}  // namespace detail

/// Streams records to `sink` in input order. Malformed lines are parse
/// errors and unknown detector ids validation errors; both carry the line
/// number. Without `strict` they land in the returned reject list.
inline std::vector<LineReject> for_each_click_record(std::istream& in, int detector_count,
                                                     const std::function<void(const ClickRecord&)>& sink,
                                                     const ParseOptions& opt = {}) {
  std::vector<LineReject> rejects;
  std::string line;
  std::size_t number = 0;
  ClickRecord rec;
  auto reject = [&](ErrorCode code, const std::string& msg) {
    const std::string full = "line " + std::to_string(number) + ": " + msg;
    if (opt.strict) fail(code, full);
    rejects.push_back({number, full});
  };
  while (std::getline(in, line)) {
    ++number;
    const auto text = detail::trim_cr(line);
    if (number == 1 && text == click_header) continue;
    if (text.empty()) continue;
    std::string_view f[3];
    if (!detail::split3(text, f)) {
      reject(ErrorCode::parse, "expected 3 comma-separated fields");
      continue;
    }
    if (!detail::parse_int(f[0], rec.trigger_id)) {
      reject(ErrorCode::parse, "bad trigger_id '" + std::string(f[0]) + "'");
      continue;
    }
    if (!detail::parse_int(f[1], rec.detector_id)) {
      reject(ErrorCode::parse, "bad detector_id '" + std::string(f[1]) + "'");
      continue;
    }
    rec.setting.assign(f[2]);
    if (!valid_setting(rec.setting)) {
      reject(ErrorCode::parse, "bad setting_id '" + rec.setting + "'");
      continue;
    }
    if (rec.detector_id < 0 || rec.detector_id >= detector_count) {
      reject(ErrorCode::validation, "detector " + std::to_string(rec.detector_id) + " out of range [0, " +
                                        std::to_string(detector_count) + ")");
      continue;
    }
    sink(rec);
  }
  return rejects;
}

struct ClickParse {
  std::vector<ClickRecord> records;
  std::vector<LineReject> rejects;
};

inline ClickParse parse_click_records(std::istream& in, int detector_count, const ParseOptions& opt = {}) {
  ClickParse out;
  out.rejects = for_each_click_record(in, detector_count, [&](const ClickRecord& r) { out.records.push_back(r); }, opt);
  return out;
}

inline void write_click_records(std::ostream& out, const std::vector<ClickRecord>& records) {
  out << click_header << '\n';
  for (const auto& r : records) out << r.trigger_id << ',' << r.detector_id << ',' << r.setting << '\n';
}

enum class TriggerClass { accepted, wrong_multiplicity, ppnr_reject, signal_collision, unmatched_pattern };

struct Classification {
  TriggerClass kind = TriggerClass::wrong_multiplicity;
  int group = -1;
  std::string herald_pattern;  // e.g. "hvv"
  std::string ppnr_config;     // arm per herald output, e.g. "aba"
  std::string signal_outcome;  // bit per signal output, h = 0, v = 1
};

struct PatternFilter {
  DetectorConfig detectors;
  HeraldRule rule;

  int expected_clicks() const {
    return static_cast<int>(detectors.signal_outputs.size() + detectors.herald_outputs.size());
  }

  Classification classify(const ClickPattern& clicks) const {
    Classification c;
    if (clicks.count() != expected_clicks()) return c;
    if (detectors.ppnr)
      for (int h : detectors.herald_outputs)
        for (auto p : {Polarization::h, Polarization::v}) {
          const int d = detectors.channel_detector(h, p);
          if (clicks.clicked(d) && clicks.clicked(d + 1)) {
            c.kind = TriggerClass::ppnr_reject;
            return c;
          }
        }
    for (int s : detectors.signal_outputs) {
      const bool h = clicks.clicked(detectors.channel_detector(s, Polarization::h));
      const bool v = clicks.clicked(detectors.channel_detector(s, Polarization::v));
      if (h == v) {
        c.kind = TriggerClass::signal_collision;
        return c;
      }
      c.signal_outcome += v ? '1' : '0';
    }
    std::string arms;
    const auto letters = herald_letters(clicks, detectors, &arms);
    if (!letters || (c.group = rule.group_of(*letters)) < 0) {
      c.kind = TriggerClass::unmatched_pattern;
      c.signal_outcome.clear();
      return c;
    }
    c.kind = TriggerClass::accepted;
    c.herald_pattern = *letters;
    c.ppnr_config = arms;
    return c;
  }
};

struct CountKey {
  std::string setting, herald_pattern, ppnr_config, signal_outcome;
  friend auto operator<=>(const CountKey&, const CountKey&) = default;
};

struct CountsTable {
  std::map<CountKey, std::uint64_t> cells;

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (const auto& [k, c] : cells) n += c;
    return n;
  }

  void merge(const CountsTable& other) {
    for (const auto& [k, c] : other.cells) cells[k] += c;
  }

  friend bool operator==(const CountsTable&, const CountsTable&) = default;
};

inline constexpr std::string_view counts_header = "setting,herald_pattern,ppnr_config,signal_outcome,counts";

inline void write_counts_csv(std::ostream& out, const CountsTable& t) {
  out << counts_header << '\n';
  for (const auto& [k, c] : t.cells)
    out << k.setting << ',' << k.herald_pattern << ',' << k.ppnr_config << ',' << k.signal_outcome << ',' << c << '\n';
}

inline CountsTable read_counts_csv(std::istream& in) {
  CountsTable t;
  std::string line;
  std::size_t number = 0;
  auto bad = [&](const std::string& msg) { fail(ErrorCode::parse, "counts line " + std::to_string(number) + ": " + msg); };
  while (std::getline(in, line)) {
    ++number;
    const auto text = detail::trim_cr(line);
    if (number == 1) {
      if (text != counts_header) bad("expected header '" + std::string(counts_header) + "'");
      continue;
    }
    if (text.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = text;
    for (auto comma = rest.find(','); comma != std::string_view::npos; comma = rest.find(',')) {
      f.push_back(rest.substr(0, comma));
      rest.remove_prefix(comma + 1);
    }
    f.push_back(rest);
    if (f.size() != 5) bad("expected 5 fields");
    std::uint64_t c = 0;
    if (!detail::parse_int(f[4], c)) bad("bad count '" + std::string(f[4]) + "'");
    CountKey key{std::string(f[0]), std::string(f[1]), std::string(f[2]), std::string(f[3])};
    if (!valid_setting(key.setting)) bad("bad setting '" + key.setting + "'");
    if (key.signal_outcome.find_first_not_of("01") != std::string::npos) bad("signal_outcome must be a bit string");
    t.cells[key] += c;
  }
  if (number == 0) fail(ErrorCode::parse, "counts: empty input");
  return t;
}

struct CountDiagnostics {
  std::uint64_t triggers = 0;
  std::uint64_t accepted = 0;
  std::uint64_t wrong_multiplicity = 0;
  std::uint64_t ppnr_reject = 0;
  std::uint64_t signal_collision = 0;
  std::uint64_t unmatched_pattern = 0;
  std::uint64_t rejected_lines = 0;

  std::uint64_t classified() const {
    return accepted + wrong_multiplicity + ppnr_reject + signal_collision + unmatched_pattern;
  }

  void merge(const CountDiagnostics& o) {
    triggers += o.triggers;
    accepted += o.accepted;
    wrong_multiplicity += o.wrong_multiplicity;
    ppnr_reject += o.ppnr_reject;
    signal_collision += o.signal_collision;
    unmatched_pattern += o.unmatched_pattern;
    rejected_lines += o.rejected_lines;
  }

  nlohmann::json to_json() const {
    return {{"triggers", triggers},
            {"accepted", accepted},
            {"wrong_multiplicity", wrong_multiplicity},
            {"ppnr_reject", ppnr_reject},
            {"signal_collision", signal_collision},
            {"unmatched_pattern", unmatched_pattern},
            {"rejected_lines", rejected_lines}};
  }
};

struct CountResult {
  CountsTable table;
  CountDiagnostics diagnostics;

  void merge(const CountResult& o) {
    table.merge(o.table);
    diagnostics.merge(o.diagnostics);
  }
};

/// Incremental counter: feed records trigger by trigger, then finish().
class CoincidenceCounter {
 public:
  explicit CoincidenceCounter(PatternFilter filter) : filter_(std::move(filter)) {}

  void add(const ClickRecord& r) {
    if (open_ && r.trigger_id != trigger_) close();
    if (!open_) {
      if (!seen_.insert(r.trigger_id).second)
        fail(ErrorCode::validation, "trigger " + std::to_string(r.trigger_id) + " is not contiguous in the input");
      open_ = true;
      trigger_ = r.trigger_id;
      setting_ = r.setting;
      clicks_ = {};
    } else if (r.setting != setting_) {
      fail(ErrorCode::validation, "trigger " + std::to_string(r.trigger_id) + " mixes settings " + setting_ + " and " + r.setting);
    }
    clicks_.set(r.detector_id);
  }

  /// `expected_triggers`, when known from the producer, accounts for triggers
  /// without any click as wrong-multiplicity.
  CountResult finish(std::uint64_t expected_triggers = 0) {
    if (open_) close();
    auto& d = result_.diagnostics;
    if (expected_triggers > d.triggers) {
      d.wrong_multiplicity += expected_triggers - d.triggers;
      d.triggers = expected_triggers;
    }
    return result_;
  }

 private:
  void close() {
    open_ = false;
    auto& d = result_.diagnostics;
    ++d.triggers;
    const auto c = filter_.classify(clicks_);
    switch (c.kind) {
      case TriggerClass::accepted:
        ++d.accepted;
        ++result_.table.cells[{setting_, c.herald_pattern, c.ppnr_config, c.signal_outcome}];
        break;
      case TriggerClass::wrong_multiplicity: ++d.wrong_multiplicity; break;
      case TriggerClass::ppnr_reject: ++d.ppnr_reject; break;
      case TriggerClass::signal_collision: ++d.signal_collision; break;
      case TriggerClass::unmatched_pattern: ++d.unmatched_pattern; break;
    }
  }

  PatternFilter filter_;
  CountResult result_;
  std::unordered_set<std::uint64_t> seen_;
  bool open_ = false;
  std::uint64_t trigger_ = 0;
  std::string setting_;
  ClickPattern clicks_;
};

inline CountResult count_coincidences(const std::vector<ClickRecord>& records, const PatternFilter& filter,
                                      std::uint64_t expected_triggers = 0) {
  CoincidenceCounter counter(filter);
  for (const auto& r : records) counter.add(r);
  return counter.finish(expected_triggers);
}

/// Outcome counts of one herald group, summed over its patterns and PPNR
/// arms. Outcome index: first signal output is the most significant bit.
inline TomographyData tomography_data(const CountsTable& table, const HeraldRule& rule, const std::string& group,
                                      double duration = 0.0) {
  int g = -1;
  for (std::size_t k = 0; k < rule.groups.size(); ++k)
    if (rule.groups[k].name == group) g = static_cast<int>(k);
  if (g < 0) fail(ErrorCode::argument, "no herald group named '" + group + "'");
  TomographyData d;
  d.duration = duration;
  for (const auto& s : pauli_settings()) d.settings[s].fill(0.0);
  for (const auto& [k, c] : table.cells) {
    if (rule.group_of(k.herald_pattern) != g) continue;
    if (k.signal_outcome.size() != tomo_qubits) fail(ErrorCode::validation, "signal_outcome '" + k.signal_outcome + "' is not 3 bits");
    d.settings[k.setting][std::stoi(k.signal_outcome, nullptr, 2)] += static_cast<double>(c);
  }
  return d;
}

}  // namespace hghz
