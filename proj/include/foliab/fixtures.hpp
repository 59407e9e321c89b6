#pragma once

#include <optional>
#include <string>
#include <vector>

#include "foliab/metric.hpp"

namespace foliab {

// A declared distinguished submersion pi onto a transverse model, together
// with the induced base metric. Present only on fixtures that ship one.
struct Submersion {
  std::vector<Expr> pi;         // n' expressions of x1..xn
  std::vector<Expr> base_g;     // n' x n' expressions of base coords x1..xn'
  Box base_domain;
  std::vector<VecD> base_identifications;  // lattice generators on base coords

  VecD project(const VecD& x) const {
    VecD y(pi.size());
    for (size_t i = 0; i < pi.size(); ++i) y[i] = pi[i].eval<double>(x);
    return y;
  }

  // Differential of pi at x applied to v.
  VecD pushforward(const VecD& x, const VecD& v) const;

  MetricField base_metric(DifferentiationConfig cfg = {}) const;
};

struct FixtureDef {
  std::string name;
  std::string summary;
  FoliationSpec spec;
  Box domain;
  std::vector<std::string> g_text;  // n*n row-major coefficient expressions
  std::optional<Submersion> submersion;
  // Coordinate identification lattice generators (periodic directions); used
  // by the injectivity-radius estimators to detect geodesic re-approach.
  std::vector<VecD> identifications;

  MetricField metric(DifferentiationConfig cfg = {}) const;
};

// Built-in fixture registry. Definitions live in data/fixtures.json and are
// embedded in the binary; an identical copy ships with the sources.
const std::vector<FixtureDef>& fixture_registry();
const FixtureDef& fixture(const std::string& name);
bool fixture_exists(const std::string& name);

// Parse a fixture (or user metric) definition from a JSON object string with
// the same schema as the registry entries.
FixtureDef parse_fixture_json(const std::string& json_text);

}  // namespace foliab
