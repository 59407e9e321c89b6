#pragma once

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "foliab/linalg.hpp"

namespace foliab {

// Error taxonomy; the CLI maps these onto exit codes.
struct FoliabError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PointOutsideDomain : FoliabError { using FoliabError::FoliabError; };
struct DegenerateMetric : FoliabError { using FoliabError::FoliabError; };
struct OrderExceeded : FoliabError { using FoliabError::FoliabError; };
struct InvalidInput : FoliabError { using FoliabError::FoliabError; };
struct UnsupportedFixture : FoliabError { using FoliabError::FoliabError; };
struct BoundaryExit : FoliabError { using FoliabError::FoliabError; };
struct ChartTooLarge : FoliabError { using FoliabError::FoliabError; };
struct RegionTooCoarse : FoliabError { using FoliabError::FoliabError; };
struct UncoveredPoint : FoliabError { using FoliabError::FoliabError; };

// Dimensions of a foliated chart: the first n' coordinates are transverse,
// the last n'' are leafwise, plaques are the slices {x' = const}.
struct FoliationSpec {
  int n_transverse = 0;
  int n_leafwise = 0;

  FoliationSpec() = default;
  FoliationSpec(int nt, int nl) : n_transverse(nt), n_leafwise(nl) {
    if (nt < 1 || nl < 1)
      throw InvalidInput("FoliationSpec: need n_transverse >= 1 and n_leafwise >= 1");
  }

  // Base-manifold metrics reuse the machinery with no leafwise factor.
  static FoliationSpec unfoliated(int n) {
    FoliationSpec s;
    s.n_transverse = n;
    s.n_leafwise = 0;
    return s;
  }

  int n_total() const { return n_transverse + n_leafwise; }
  bool is_transverse_index(int i) const { return i < n_transverse; }
};

// Axis-aligned chart domain.
struct Box {
  VecD lo, hi;

  Box() = default;
  Box(VecD l, VecD h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() != hi.size()) throw InvalidInput("Box: lo/hi size mismatch");
    for (size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) throw InvalidInput("Box: lo must be < hi per axis");
  }

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const VecD& x, double margin = 0.0) const {
    if (x.size() != lo.size()) return false;
    for (size_t i = 0; i < lo.size(); ++i)
      if (x[i] < lo[i] + margin || x[i] > hi[i] - margin) return false;
    return true;
  }

  VecD center() const {
    VecD c(lo.size());
    for (size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
  }

  double min_halfwidth() const {
    double m = 1e300;
    for (size_t i = 0; i < lo.size(); ++i) m = std::min(m, 0.5 * (hi[i] - lo[i]));
    return m;
  }
};

struct Point {
  std::string chart_id = "main";
  VecD coords;

  Point() = default;
  Point(VecD c) : coords(std::move(c)) {}
  Point(std::string id, VecD c) : chart_id(std::move(id)), coords(std::move(c)) {}
};

struct TangentVector {
  Point base;
  VecD components;

  TangentVector() = default;
  TangentVector(Point b, VecD c) : base(std::move(b)), components(std::move(c)) {
    if (base.coords.size() != components.size())
      throw InvalidInput("TangentVector: component count != chart dimension");
  }
};

struct MultiIndex {
  std::vector<int> exponents;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> e) : exponents(std::move(e)) {
    for (int v : exponents)
      if (v < 0) throw InvalidInput("MultiIndex: exponents must be nonnegative");
  }

  int order() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

  int order_transverse(const FoliationSpec& s) const {
    int k = 0;
    for (int i = 0; i < s.n_transverse && i < static_cast<int>(exponents.size()); ++i)
      k += exponents[i];
    return k;
  }

  int order_leafwise(const FoliationSpec& s) const {
    return order() - order_transverse(s);
  }

  // Expanded direction list, e.g. (2,1) -> [0,0,1].
  std::vector<int> directions() const {
    std::vector<int> d;
    for (int i = 0; i < static_cast<int>(exponents.size()); ++i)
      for (int r = 0; r < exponents[i]; ++r) d.push_back(i);
    return d;
  }
};

}  // namespace foliab
