#pragma once

// Polytopes whose redundant rows and implicit equalities are known by
// construction.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rayen/constraint_model.hpp"
#include "rayen/rng.hpp"

namespace rayen::testing {

struct PlantedCase {
  ConstraintSet cs;
  std::vector<Index> redundant;  ///< rows of A1 that must be removed
  std::vector<Index> equalities; ///< rows of A1 that are always tight
  Index expected_n = 0;
};

enum class PlantedShape {
  polygon,  ///< k = 2, tangent lines of the unit circle
  sphere,   ///< k = 3, tangent planes of the unit sphere
  prism,    ///< k = 3, vertical polygon prism sliced by a tilted plane
};

namespace detail {

inline std::vector<Vector> polygon_normals(CounterRng& rng, Index count) {
  std::vector<Vector> out;
  const double base = rng.uniform(0.0, 2.0 * M_PI);
  const double gap = 2.0 * M_PI / static_cast<double>(count);
  for (Index i = 0; i < count; ++i) {
    const double t = base + gap * (static_cast<double>(i) + rng.uniform(-0.3, 0.3));
    Vector a(2);
    a << std::cos(t), std::sin(t);
    out.push_back(a);
  }
  return out;
}

inline std::vector<Vector> sphere_normals(CounterRng& rng, Index count) {
  std::vector<Vector> out;
  while (static_cast<Index>(out.size()) < count) {
    const Vector a = rng.unit_vector(3);
    bool far = true;
    for (const auto& b : out) far = far && a.dot(b) <= 0.98;
    if (far) out.push_back(a);
  }
  return out;
}

}  // namespace detail

/// Builds a polytope from `facets` irredundant rows, plants `redundant`
/// implied rows (shifted copies and slack positive combinations), optionally
/// plants an equality pair, then shuffles all rows.
inline PlantedCase make_planted(PlantedShape shape, Index facets, Index redundant, std::uint64_t seed) {
  CounterRng rng(seed);
  const Index k = shape == PlantedShape::polygon ? 2 : 3;
  std::vector<Vector> rows_a;
  std::vector<double> rows_b;
  std::vector<int> tag;  // 0 facet, 1 redundant, 2 equality

  if (shape == PlantedShape::sphere) {
    for (auto& a : detail::sphere_normals(rng, facets)) rows_a.push_back(a);
  } else {
    for (const auto& a2 : detail::polygon_normals(rng, facets)) {
      Vector a = Vector::Zero(k);
      a.head(2) = a2;
      rows_a.push_back(a);
    }
  }
  rows_b.assign(rows_a.size(), 1.0);
  tag.assign(rows_a.size(), 0);

  for (Index t = 0; t < redundant; ++t) {
    const auto i = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(facets)));
    const double slack = rng.uniform(0.1, 0.5);
    if (t % 2 == 0) {
      rows_a.push_back(rows_a[i]);
      rows_b.push_back(rows_b[i] + slack);
    } else {
      auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(facets)));
      if (j == i) j = (j + 1) % static_cast<std::size_t>(facets);
      const double l = rng.uniform(0.2, 1.0);
      const double m = rng.uniform(0.2, 1.0);
      rows_a.push_back(l * rows_a[i] + m * rows_a[j]);
      rows_b.push_back(l * rows_b[i] + m * rows_b[j] + slack);
    }
    tag.push_back(1);
  }

  Index n = k;
  if (shape == PlantedShape::prism) {
    Vector a(3);
    a << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 1.0;
    a.normalize();
    Vector yc(3);
    yc << rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-2.0, 2.0);
    const double beta = a.dot(yc);
    rows_a.push_back(a);
    rows_b.push_back(beta);
    tag.push_back(2);
    rows_a.push_back(-a);
    rows_b.push_back(-beta);
    tag.push_back(2);
    n = 2;
  }

  std::vector<Index> perm(rows_a.size());
  std::iota(perm.begin(), perm.end(), Index{0});
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.below(i))]);
  }

  PlantedCase out;
  out.cs.k = k;
  out.cs.linear.A1.resize(static_cast<Index>(perm.size()), k);
  out.cs.linear.b1.resize(static_cast<Index>(perm.size()));
  for (std::size_t pos = 0; pos < perm.size(); ++pos) {
    const auto src = static_cast<std::size_t>(perm[pos]);
    out.cs.linear.A1.row(static_cast<Index>(pos)) = rows_a[src].transpose();
    out.cs.linear.b1[static_cast<Index>(pos)] = rows_b[src];
    if (tag[src] == 1) out.redundant.push_back(static_cast<Index>(pos));
    if (tag[src] == 2) out.equalities.push_back(static_cast<Index>(pos));
  }
  out.expected_n = n;
  return out;
}

}  // namespace rayen::testing
