#pragma once

// JSON description of piecewise functions:
//
//   { "segments": [ { "from": -1 | "-inf", "to": 2 | "+inf",
//                     "shape": "constant" | "polynomial" | "sinusoid" | "indicator",
//                     "params": { ... } } ],
//     "domain_hint": 20 }                                  (optional)
//
// params per shape:
//   constant    { "value": c }
//   polynomial  { "coefficients": [c0, c1, ...] }          ascending powers
//   sinusoid    { "offset", "amplitude", "frequency" = 1, "phase" = 0 }
//   indicator   { "lower", "upper", "value" = 1 }          right-hand sides only

#include <fstream>
#include <string>

#include <json.hpp>

#include "sturm/potential.hpp"

namespace sturm {

namespace detail {

inline double endpoint(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw InvalidInput(std::string("segment is missing '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "-inf") return -kInf;
    if (s == "+inf" || s == "inf") return kInf;
  }
  throw InvalidInput(std::string("bad endpoint '") + key + "': " + v.dump());
}

inline double param(const nlohmann::json& p, const char* key,
                    std::optional<double> fallback = {}) {
  if (!p.contains(key)) {
    if (fallback) return *fallback;
    throw InvalidInput(std::string("missing parameter '") + key + "'");
  }
  if (!p.at(key).is_number())
    throw InvalidInput(std::string("parameter '") + key + "' must be a number");
  return p.at(key).get<double>();
}

}  // namespace detail

/// Parses the segment grammar. `allow_indicator` is set for right-hand sides.
inline PiecewiseFunction piecewise_from_json(const nlohmann::json& doc,
                                             bool allow_indicator) {
  if (!doc.is_object() || !doc.contains("segments") || !doc.at("segments").is_array())
    throw InvalidInput("expected an object with a 'segments' array");
  std::vector<Segment> segs;
  for (const auto& js : doc.at("segments")) {
    const double from = detail::endpoint(js, "from");
    const double to = detail::endpoint(js, "to");
    if (!js.contains("shape") || !js.at("shape").is_string())
      throw InvalidInput("segment is missing 'shape'");
    const auto shape = js.at("shape").get<std::string>();
    const nlohmann::json params = js.value("params", nlohmann::json::object());
    if (shape == "constant") {
      segs.push_back({from, to, Constant{detail::param(params, "value")}});
    } else if (shape == "polynomial") {
      if (!params.contains("coefficients") || !params.at("coefficients").is_array())
        throw InvalidInput("polynomial needs a 'coefficients' array");
      Polynomial p;
      for (const auto& c : params.at("coefficients")) {
        if (!c.is_number()) throw InvalidInput("polynomial coefficient must be a number");
        p.coefficients.push_back(c.get<double>());
      }
      segs.push_back({from, to, std::move(p)});
    } else if (shape == "sinusoid") {
      segs.push_back({from, to,
                      Sinusoid{detail::param(params, "offset"),
                               detail::param(params, "amplitude"),
                               detail::param(params, "frequency", 1.0),
                               detail::param(params, "phase", 0.0)}});
    } else if (shape == "indicator" && allow_indicator) {
      const double lower = detail::param(params, "lower");
      const double upper = detail::param(params, "upper");
      const double value = detail::param(params, "value", 1.0);
      if (!(lower < upper)) throw InvalidInput("indicator needs lower < upper");
      const double a = std::clamp(lower, from, to);
      const double b = std::clamp(upper, from, to);
      segs.push_back({from, a, Constant{0.0}});
      segs.push_back({a, b, Constant{value}});
      segs.push_back({b, to, Constant{0.0}});
    } else {
      throw InvalidInput("unknown shape '" + shape + "'");
    }
  }
  return PiecewiseFunction(std::move(segs));
}

inline Potential potential_from_json(const nlohmann::json& doc) {
  std::optional<double> hint;
  if (doc.is_object() && doc.contains("domain_hint")) {
    if (!doc.at("domain_hint").is_number())
      throw InvalidInput("domain_hint must be a number");
    hint = doc.at("domain_hint").get<double>();
  }
  return Potential(piecewise_from_json(doc, false), hint);
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline Potential load_potential(const std::string& path) {
  return potential_from_json(read_json_file(path));
}

inline PiecewiseFunction load_rhs(const std::string& path) {
  return piecewise_from_json(read_json_file(path), true);
}

}  // namespace sturm
