#include "foliab/fixtures.hpp"

#include <json.hpp>

#include <mutex>

namespace foliab {

using nlohmann::json;

namespace {

// Embedded copy of data/fixtures.json (kept in sync by hand; the unit tests
// compare the two).
const char* kFixtureJson = R"JSON(
{
  "schema_version": 1,
  "fixtures": [
    {
      "name": "FIX-PRODUCT",
      "summary": "flat product foliation of the plane, leaves {x1 = const}",
      "n_transverse": 1,
      "n_leafwise": 1,
      "domain": { "lo": [-4.0, -4.0], "hi": [4.0, 4.0] },
      "g": [["1", "0"], ["0", "1"]],
      "submersion": {
        "pi": ["x1"],
        "base_g": [["1"]],
        "base_domain": { "lo": [-4.0], "hi": [4.0] }
      }
    },
    {
      "name": "FIX-SLOPE",
      "summary": "Euclidean plane foliated by parallel lines of slope 1/2, in foliated coordinates (constant non-diagonal metric)",
      "n_transverse": 1,
      "n_leafwise": 1,
      "domain": { "lo": [-4.0, -4.0], "hi": [4.0, 4.0] },
      "g": [["1", "0.5"], ["0.5", "1.25"]],
      "submersion": {
        "pi": ["x1"],
        "base_g": [["0.8"]],
        "base_domain": { "lo": [-4.0], "hi": [4.0] }
      }
    },
    {
      "name": "FIX-WARP",
      "summary": "warped product dx^2 + exp(2 x1) dy^2 (hyperbolic plane), leaves {x1 = const}",
      "n_transverse": 1,
      "n_leafwise": 1,
      "domain": { "lo": [-5.0, -5.0], "hi": [5.0, 5.0] },
      "g": [["1", "0"], ["0", "exp(2*x1)"]],
      "submersion": {
        "pi": ["x1"],
        "base_g": [["1"]],
        "base_domain": { "lo": [-5.0], "hi": [5.0] }
      }
    },
    {
      "name": "FIX-WARP-SINGULAR",
      "summary": "dx^2 + x1^2 dy^2 on (0,1) x (-1,1); leaf second fundamental form blows up as x1 -> 0",
      "n_transverse": 1,
      "n_leafwise": 1,
      "domain": { "lo": [0.001, -1.0], "hi": [1.0, 1.0] },
      "g": [["1", "0"], ["0", "x1^2"]],
      "submersion": {
        "pi": ["x1"],
        "base_g": [["1"]],
        "base_domain": { "lo": [0.001], "hi": [1.0] }
      }
    },
    {
      "name": "FIX-HOPF",
      "summary": "round unit 3-sphere in Euler-angle chart (x1,x2,x3)=(theta,phi,psi), Hopf fibers {(x1,x2) = const}",
      "n_transverse": 2,
      "n_leafwise": 1,
      "domain": { "lo": [0.2, -7.0, -14.0], "hi": [2.9416, 7.0, 14.0] },
      "g": [
        ["0.25", "0", "0"],
        ["0", "0.25", "cos(x1)/4"],
        ["0", "cos(x1)/4", "0.25"]
      ],
      "identifications": [
        [0.0, 6.283185307179586, 6.283185307179586],
        [0.0, 0.0, 12.566370614359172]
      ],
      "submersion": {
        "pi": ["x1", "x2"],
        "base_g": [["0.25", "0"], ["0", "sin(x1)^2/4"]],
        "base_domain": { "lo": [0.2, -7.0], "hi": [2.9416, 7.0] },
        "base_identifications": [[0.0, 6.283185307179586]]
      }
    }
  ]
}
)JSON";

Box parse_box(const json& j) {
  return Box(j.at("lo").get<VecD>(), j.at("hi").get<VecD>());
}

FixtureDef parse_fixture(const json& j) {
  FixtureDef f;
  f.name = j.at("name").get<std::string>();
  f.summary = j.value("summary", "");
  f.spec = FoliationSpec(j.at("n_transverse").get<int>(), j.at("n_leafwise").get<int>());
  f.domain = parse_box(j.at("domain"));
  const int n = f.spec.n_total();
  const auto& rows = j.at("g");
  if (static_cast<int>(rows.size()) != n)
    throw InvalidInput("fixture '" + f.name + "': g must be n x n");
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != n)
      throw InvalidInput("fixture '" + f.name + "': g must be n x n");
    for (const auto& cell : row) f.g_text.push_back(cell.get<std::string>());
  }
  if (j.contains("identifications"))
    for (const auto& v : j.at("identifications"))
      f.identifications.push_back(v.get<VecD>());
  if (j.contains("submersion")) {
    const auto& sj = j.at("submersion");
    Submersion s;
    for (const auto& e : sj.at("pi"))
      s.pi.push_back(Expr::parse(e.get<std::string>(), n));
    if (static_cast<int>(s.pi.size()) != f.spec.n_transverse)
      throw InvalidInput("fixture '" + f.name + "': pi must have n' components");
    const int nb = f.spec.n_transverse;
    for (const auto& row : sj.at("base_g"))
      for (const auto& cell : row)
        s.base_g.push_back(Expr::parse(cell.get<std::string>(), nb));
    if (static_cast<int>(s.base_g.size()) != nb * nb)
      throw InvalidInput("fixture '" + f.name + "': base_g must be n' x n'");
    s.base_domain = parse_box(sj.at("base_domain"));
    if (sj.contains("base_identifications"))
      for (const auto& v : sj.at("base_identifications"))
        s.base_identifications.push_back(v.get<VecD>());
    f.submersion = std::move(s);
  }
  return f;
}

std::vector<FixtureDef> load_registry() {
  json doc = json::parse(kFixtureJson);
  std::vector<FixtureDef> out;
  for (const auto& j : doc.at("fixtures")) out.push_back(parse_fixture(j));
  return out;
}

}  // namespace

VecD Submersion::pushforward(const VecD& x, const VecD& v) const {
  const int n = static_cast<int>(x.size());
  VecD out(pi.size(), 0.0);
  std::vector<Dual<double>> xs(n);
  for (int dir = 0; dir < n; ++dir) {
    if (v[dir] == 0.0) continue;
    for (int k = 0; k < n; ++k) xs[k] = {x[k], k == dir ? 1.0 : 0.0};
    for (size_t i = 0; i < pi.size(); ++i) out[i] += v[dir] * pi[i].eval(xs).d;
  }
  return out;
}

MetricField Submersion::base_metric(DifferentiationConfig cfg) const {
  return MetricField(FoliationSpec::unfoliated(base_domain.dim()), base_domain,
                     base_g, cfg, "base");
}

MetricField FixtureDef::metric(DifferentiationConfig cfg) const {
  std::vector<Expr> entries;
  entries.reserve(g_text.size());
  for (const auto& t : g_text) entries.push_back(Expr::parse(t, spec.n_total()));
  return MetricField(spec, domain, std::move(entries), cfg, name);
}

const std::vector<FixtureDef>& fixture_registry() {
  static std::vector<FixtureDef> reg = load_registry();
  return reg;
}

bool fixture_exists(const std::string& name) {
  for (const auto& f : fixture_registry())
    if (f.name == name) return true;
  return false;
}

const FixtureDef& fixture(const std::string& name) {
  for (const auto& f : fixture_registry())
    if (f.name == name) return f;
  throw UnsupportedFixture("unknown fixture '" + name + "'");
}

FixtureDef parse_fixture_json(const std::string& json_text) {
  return parse_fixture(json::parse(json_text));
}

}  // namespace foliab
