#pragma once

// Strict JSON reading helpers. Every error names the JSON pointer of the
// offending value so users can locate it in the input document.

#include "hghz/error.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

namespace hghz::json {

using nlohmann::json;

inline json parse_text(const std::string& text, std::string_view source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse, std::string(source) + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_file(const std::string& path) { return parse_text(read_file(path), path); }

inline std::string where(const std::string& pointer) { return pointer.empty() ? "/" : pointer; }

[[noreturn]] inline void schema_error(const std::string& pointer, const std::string& message) {
  fail(ErrorCode::validation, where(pointer) + ": " + message);
}

inline void require_object(const json& j, const std::string& pointer) {
  if (!j.is_object()) schema_error(pointer, "expected an object");
}

inline void check_keys(const json& j, const std::string& pointer, std::initializer_list<std::string_view> allowed) {
  require_object(j, pointer);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || (a == key);
    if (!ok) schema_error(pointer + "/" + key, "unknown field '" + key + "'");
  }
}

inline const json& member(const json& j, const std::string& pointer, const std::string& key) {
  if (!j.contains(key)) schema_error(pointer, "missing required field '" + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& pointer) {
  if (!j.is_number()) schema_error(pointer, "expected a number");
  return j.get<double>();
}

inline long long integer(const json& j, const std::string& pointer) {
  if (!j.is_number_integer()) schema_error(pointer, "expected an integer");
  return j.get<long long>();
}

inline std::string string(const json& j, const std::string& pointer) {
  if (!j.is_string()) schema_error(pointer, "expected a string");
  return j.get<std::string>();
}

inline bool boolean(const json& j, const std::string& pointer) {
  if (!j.is_boolean()) schema_error(pointer, "expected a boolean");
  return j.get<bool>();
}

inline const json& array(const json& j, const std::string& pointer) {
  if (!j.is_array()) schema_error(pointer, "expected an array");
  return j;
}

}  // namespace hghz::json
