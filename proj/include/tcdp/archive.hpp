#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "tcdp/approx.hpp"

namespace tcdp {

/// Hex-float text ("%a") of a double; parses back bit-identically.
std::string hex_double(double v);
double parse_hex_double(const std::string& s);

/// {"domain": {"lower", "upper"}, "degree", "dimension", "order": "grlex",
///  "coefficients": [hex strings]}
nlohmann::json surface_to_json(const ChebyshevSurface& s);
ChebyshevSurface surface_from_json(const nlohmann::json& j);

void save_surface(const ChebyshevSurface& s, const std::string& path);
ChebyshevSurface load_surface(const std::string& path);

}  // namespace tcdp
