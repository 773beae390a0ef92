#pragma once

#include <cctype>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "contsurv/gcomp.hpp"
#include "contsurv/surface.hpp"

namespace testing {

inline contsurv::Surface grid_surface(const std::vector<double>& z, const std::vector<double>& t,
                                      const std::function<double(double, double)>& f) {
  contsurv::Surface s;
  s.z_grid = z;
  s.t_grid = t;
  s.values.resize(static_cast<Eigen::Index>(z.size()), static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j)
      s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f(z[i], t[j]);
  s.defined.setConstant(s.values.rows(), s.values.cols(), true);
  s.extrapolated.assign(z.size(), false);
  s.model = "test";
  return s;
}

// exp(-0.1 t exp(beta z)) on the usual exposure range
inline contsurv::Surface linear_surface(double beta = -1.0, std::size_t nz = 24, std::size_t nt = 15) {
  return grid_surface(contsurv::linspace(0.35, 1.5, nz), contsurv::linspace(0.0, 10.0, nt),
                      [beta](double z, double t) { return std::exp(-0.1 * t * std::exp(beta * z)); });
}

// hazard smallest at z = 0.8, survival peaks there
inline contsurv::Surface quadratic_surface() {
  return grid_surface(contsurv::linspace(0.35, 1.5, 24), contsurv::linspace(0.0, 10.0, 15), [](double z, double t) {
    return std::exp(-0.1 * t * std::exp(4.0 * (z - 0.8) * (z - 0.8)));
  });
}

// optimum drifts from 0.5 to 1.3 over time
inline contsurv::Surface drifting_surface() {
  return grid_surface(contsurv::linspace(0.35, 1.5, 24), contsurv::linspace(0.0, 10.0, 15), [](double z, double t) {
    const double c = 0.5 + 0.08 * t;
    return std::exp(-0.1 * t * std::exp(4.0 * (z - c) * (z - c)));
  });
}

// Minimal XML check: balanced tags, quoted attributes, known entities only.
// Returns an empty string when well formed, otherwise a description.
inline std::string xml_problem(const std::string& x) {
  std::vector<std::string> stack;
  std::size_t i = 0, roots = 0;
  auto name_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.'; };
  while (i < x.size()) {
    if (x[i] == '&') {
      const auto semi = x.find(';', i);
      if (semi == std::string::npos) return "dangling &";
      const auto ent = x.substr(i, semi - i + 1);
      if (ent != "&amp;" && ent != "&lt;" && ent != "&gt;" && ent != "&quot;" && ent != "&apos;") return "entity " + ent;
      i = semi + 1;
      continue;
    }
    if (x[i] == '>') return "stray >";
    if (x[i] != '<') {
      ++i;
      continue;
    }
    if (x.compare(i, 5, "<?xml") == 0) {
      const auto e = x.find("?>", i);
      if (e == std::string::npos) return "open declaration";
      i = e + 2;
      continue;
    }
    if (x.compare(i, 4, "<!--") == 0) {
      const auto e = x.find("-->", i);
      if (e == std::string::npos) return "open comment";
      i = e + 3;
      continue;
    }
    const bool closing = x[i + 1] == '/';
    std::size_t k = i + (closing ? 2 : 1);
    const std::size_t start = k;
    while (k < x.size() && name_char(x[k])) ++k;
    const std::string name = x.substr(start, k - start);
    if (name.empty()) return "empty tag name";
    if (closing) {
      while (k < x.size() && std::isspace(static_cast<unsigned char>(x[k]))) ++k;
      if (k >= x.size() || x[k] != '>') return "bad closing tag " + name;
      if (stack.empty() || stack.back() != name) return "mismatched </" + name + ">";
      stack.pop_back();
      i = k + 1;
      continue;
    }
    std::map<std::string, bool> seen;
    bool self_closing = false;
    while (true) {
      while (k < x.size() && std::isspace(static_cast<unsigned char>(x[k]))) ++k;
      if (k >= x.size()) return "unterminated <" + name;
      if (x[k] == '>') {
        ++k;
        break;
      }
      if (x[k] == '/') {
        if (k + 1 >= x.size() || x[k + 1] != '>') return "bad /";
        self_closing = true;
        k += 2;
        break;
      }
      const std::size_t a = k;
      while (k < x.size() && name_char(x[k])) ++k;
      const std::string attr = x.substr(a, k - a);
      if (attr.empty()) return "bad attribute in <" + name;
      if (seen[attr]) return "duplicate attribute " + attr;
      seen[attr] = true;
      if (k >= x.size() || x[k] != '=' || k + 1 >= x.size() || x[k + 1] != '"') return "unquoted attribute " + attr;
      const auto close = x.find('"', k + 2);
      if (close == std::string::npos) return "open attribute " + attr;
      const auto value = x.substr(k + 2, close - k - 2);
      if (value.find('<') != std::string::npos) return "< inside attribute " + attr;
      k = close + 1;
    }
    if (stack.empty()) ++roots;
    if (!self_closing) stack.push_back(name);
    i = k;
  }
  if (!stack.empty()) return "unclosed <" + stack.back() + ">";
  if (roots != 1) return "expected one root element";
  return "";
}

// Every value of attribute `attr` on elements carrying class="cls".
inline std::vector<std::string> attribute_values(const std::string& svg, const std::string& cls, const std::string& attr) {
  std::vector<std::string> out;
  const std::string marker = "class=\"" + cls + "\"";
  for (auto p = svg.find(marker); p != std::string::npos; p = svg.find(marker, p + 1)) {
    const auto end = svg.find('>', p);
    const auto tag = svg.substr(p, end - p);
    const auto a = tag.find(" " + attr + "=\"");
    if (a == std::string::npos) continue;
    const auto v = a + attr.size() + 3;
    out.push_back(tag.substr(v, tag.find('"', v) - v));
  }
  return out;
}

inline std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace testing
