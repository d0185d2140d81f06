#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "varjet/errors.hpp"
#include "varjet/poly.hpp"
#include "varjet/system.hpp"

namespace varjet {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path);
  return buf.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out.good()) throw IoError("write failure on " + path);
}

/// FNV-1a, 64 bit, over raw bytes.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string digest_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string(buf);
}

namespace detail {

inline std::size_t text_line(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  const std::size_t end = std::min(byte, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

/// Best-effort line of a field's first key occurrence, 0 when absent.
inline std::size_t field_line(const std::string& text,
                              const std::string& field) {
  const std::size_t pos = text.find("\"" + field + "\"");
  if (pos == std::string::npos) return 0;
  return text_line(text, pos);
}

inline std::string field_tag(const std::string& text,
                             const std::string& field) {
  const std::size_t line = field_line(text, field);
  if (line == 0) return "field '" + field + "'";
  return "field '" + field + "' (line " + std::to_string(line) + ")";
}

inline nlohmann::ordered_json parse_json(const std::string& text) {
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("syntax error at line " +
                     std::to_string(text_line(text, e.byte)) + ": " +
                     e.what());
  }
}

inline void check_keys(const nlohmann::ordered_json& j,
                       const std::vector<std::string>& allowed,
                       const std::string& text) {
  if (!j.is_object()) throw ParseError("document root must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const std::string& k : allowed) known = known || k == item.key();
    if (!known) {
      throw ParseError("unknown " + field_tag(text, item.key()));
    }
  }
  for (const std::string& k : allowed) {
    if (!j.contains(k)) throw ParseError("missing field '" + k + "'");
  }
}

inline void check_format(const nlohmann::ordered_json& j,
                         const std::string& expect,
                         const std::string& text) {
  if (!j.at("format").is_string() ||
      j.at("format").get<std::string>() != expect) {
    throw ParseError(field_tag(text, "format") + ": expected \"" + expect +
                     "\"");
  }
}

inline std::size_t parse_dim(const nlohmann::ordered_json& j,
                             const std::string& text) {
  const auto& jn = j.at("n");
  if (!jn.is_number_unsigned() || jn.get<std::uint64_t>() == 0 ||
      jn.get<std::uint64_t>() > 8) {
    throw ParseError(field_tag(text, "n") +
                     ": expected an integer in 1..8");
  }
  return jn.get<std::size_t>();
}

inline PolyMat parse_poly_list(const nlohmann::ordered_json& j,
                               const std::string& field, std::size_t expect,
                               const std::string& text) {
  const auto& arr = j.at(field);
  if (!arr.is_array() || arr.size() != expect) {
    throw ParseError(field_tag(text, field) + ": expected an array of " +
                     std::to_string(expect) + " polynomial entries");
  }
  PolyMat out;
  out.reserve(expect);
  for (std::size_t i = 0; i < expect; ++i) {
    const auto& entry = arr.at(i);
    if (!entry.is_array()) {
      throw ParseError(field_tag(text, field) + ": entry " +
                       std::to_string(i) +
                       " must be a list of coefficients");
    }
    std::vector<double> coeffs;
    coeffs.reserve(entry.size());
    for (const auto& v : entry) {
      if (!v.is_number()) {
        throw ParseError(field_tag(text, field) + ": entry " +
                         std::to_string(i) +
                         " has a non-numeric coefficient");
      }
      coeffs.push_back(v.get<double>());
    }
    out.emplace_back(std::move(coeffs));
  }
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

}  // namespace detail

/// Parses a "varjet-sys/1" document: n plus the coefficient lists a, B, C,
/// T3, every entry a polynomial in t as ascending coefficients.
inline PolySystem parse_system(const std::string& text) {
  const nlohmann::ordered_json j = detail::parse_json(text);
  detail::check_keys(j, {"format", "n", "a", "B", "C", "T3"}, text);
  detail::check_format(j, "varjet-sys/1", text);
  const std::size_t n = detail::parse_dim(j, text);
  PolyMat a = detail::parse_poly_list(j, "a", n, text);
  PolyMat b = detail::parse_poly_list(j, "B", n * n, text);
  PolyMat c = detail::parse_poly_list(j, "C", n * n * n, text);
  PolyMat t3 = detail::parse_poly_list(j, "T3", n * n * n * n, text);
  return PolySystem(n, std::move(a), std::move(b), std::move(c),
                    std::move(t3));
}

/// Parses a "varjet-ric/1" document: n plus the coefficient lists a, B, c.
inline RiccatiCoeffs parse_riccati(const std::string& text) {
  const nlohmann::ordered_json j = detail::parse_json(text);
  detail::check_keys(j, {"format", "n", "a", "B", "c"}, text);
  detail::check_format(j, "varjet-ric/1", text);
  const std::size_t n = detail::parse_dim(j, text);
  PolyMat a = detail::parse_poly_list(j, "a", n, text);
  PolyMat b = detail::parse_poly_list(j, "B", n * n, text);
  PolyMat c = detail::parse_poly_list(j, "c", n, text);
  return RiccatiCoeffs(n, std::move(a), std::move(b), std::move(c));
}

inline PolySystem load_system(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_system(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline RiccatiCoeffs load_riccati(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_riccati(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

/// Common head of a "varjet-report/1" document. The timestamp is the only
/// field that varies between identical runs.
inline nlohmann::ordered_json report_skeleton(const std::string& command,
                                              const std::string& input_digest,
                                              std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["format"] = "varjet-report/1";
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  j["input_digest"] = input_digest;
  j["seed"] = seed;
  j["timestamp"] = detail::utc_timestamp();
  return j;
}

/// Plot-ready CSV with one row per sample: t, residual, scale.
inline std::string residual_csv(const std::vector<double>& t,
                                const std::vector<double>& residual,
                                const std::vector<double>& scale) {
  if (t.size() != residual.size() || t.size() != scale.size()) {
    throw ShapeError("residual_csv: column lengths differ");
  }
  std::string out = "t,residual,scale\n";
  char buf[96];
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", t[i], residual[i],
                  scale[i]);
    out += buf;
  }
  return out;
}

}  // namespace varjet
