#include "tcdp/archive.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace tcdp {

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::invalid_argument("bad hex-float literal: " + s);
  return v;
}

namespace {

nlohmann::json hex_array(std::span<const double> v) {
  auto a = nlohmann::json::array();
  for (double x : v) a.push_back(hex_double(x));
  return a;
}

std::vector<double> parse_array(const nlohmann::json& a) {
  std::vector<double> v;
  v.reserve(a.size());
  for (const auto& e : a) v.push_back(e.is_string() ? parse_hex_double(e.get<std::string>()) : e.get<double>());
  return v;
}

}  // namespace

nlohmann::json surface_to_json(const ChebyshevSurface& s) {
  nlohmann::json j;
  j["domain"] = {{"lower", hex_array(s.domain().lower)}, {"upper", hex_array(s.domain().upper)}};
  j["degree"] = s.degree();
  j["dimension"] = s.dimension();
  j["order"] = "grlex";
  j["coefficients"] = hex_array(s.coefficients());
  return j;
}

ChebyshevSurface surface_from_json(const nlohmann::json& j) {
  if (j.at("order").get<std::string>() != "grlex") throw std::invalid_argument("unsupported coefficient order");
  HyperRectangle dom{parse_array(j.at("domain").at("lower")), parse_array(j.at("domain").at("upper"))};
  if (dom.dimension() != j.at("dimension").get<std::size_t>()) throw std::invalid_argument("dimension mismatch");
  return ChebyshevSurface(std::move(dom), j.at("degree").get<int>(), parse_array(j.at("coefficients")));
}

void save_surface(const ChebyshevSurface& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << surface_to_json(s).dump() << '\n';
}

ChebyshevSurface load_surface(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return surface_from_json(nlohmann::json::parse(in));
}

}  // namespace tcdp
