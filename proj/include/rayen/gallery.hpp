#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rayen/constraint_model.hpp"

namespace rayen {

struct GalleryEntry {
  std::string name;
  ConstraintSet set;
  Index expected_n = 0;
};

namespace detail {

inline Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Index>(r.size()), r.size() ? static_cast<Index>(r.begin()->size()) : 0);
  Index i = 0;
  for (const auto& row : r) {
    Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline QuadraticConstraint ball(const Vector& center, double radius) {
  const Index k = center.size();
  QuadraticConstraint q;
  q.P = 2.0 * Matrix::Identity(k, k);
  q.q = -2.0 * center;
  q.r = center.squaredNorm() - radius * radius;
  return q;
}

inline Matrix sym(Index r, std::initializer_list<std::tuple<Index, Index, double>> entries) {
  Matrix m = Matrix::Zero(r, r);
  for (const auto& [i, j, x] : entries) {
    m(i, j) = x;
    m(j, i) = x;
  }
  return m;
}

}  // namespace detail

/// Twelve small reference sets: four with k = n = 2, two with k = 3 and a
/// two-dimensional affine hull (one explicit, one hidden in an inequality
/// pair), and six with k = n = 3.
inline std::vector<GalleryEntry> reference_gallery() {
  using detail::rows;
  using detail::vec;
  std::vector<GalleryEntry> g;

  {  // pentagon with one slack row
    ConstraintSet cs;
    cs.k = 2;
    cs.linear.A1 = rows({{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 1}, {1, 0}});
    cs.linear.b1 = vec({1, 1, 1, 1, 1.5, 3});
    g.push_back({"pentagon", cs, 2});
  }
  {  // box cut by an off-centre disk
    ConstraintSet cs;
    cs.k = 2;
    cs.linear.A1 = rows({{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
    cs.linear.b1 = vec({1, 1, 1, 1});
    cs.quadratics.push_back(detail::ball(vec({0.5, 0.3}), 1.2));
    g.push_back({"box-disk", cs, 2});
  }
  {  // hyperbolic region ||(y0, 1)|| <= 0.5 y1 + 2, below a line
    ConstraintSet cs;
    cs.k = 2;
    SocConstraint s;
    s.M = rows({{1, 0}, {0, 0}});
    s.s = vec({0, 1});
    s.c = vec({0, 0.5});
    s.d = 2;
    cs.socs.push_back(s);
    cs.linear.A1 = rows({{0.3, 1}});
    cs.linear.b1 = vec({1.5});
    g.push_back({"soc-halfplane", cs, 2});
  }
  {  // 3x3 LMI region in the plane
    ConstraintSet cs;
    cs.k = 2;
    LmiConstraint L;
    L.F.push_back(detail::sym(3, {{0, 1, 1.0}}));
    L.F.push_back(detail::sym(3, {{0, 2, 1.0}, {1, 1, 0.4}}));
    L.F.push_back(detail::sym(3, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}, {1, 2, 0.3}}));
    cs.lmi = L;
    g.push_back({"lmi-planar", cs, 2});
  }
  {  // triangle on the plane y0 + y1 + y2 = 1 cut by a sphere
    ConstraintSet cs;
    cs.k = 3;
    cs.linear.A1 = rows({{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}});
    cs.linear.b1 = vec({0, 0, 0});
    cs.linear.A2 = rows({{1, 1, 1}});
    cs.linear.b2 = vec({1});
    cs.quadratics.push_back(detail::ball(vec({0.2, 0.2, 0.2}), 0.6));
    g.push_back({"simplex-sphere", cs, 2});
  }
  {  // slab of zero width hidden in two inequalities, with a cone and box
    ConstraintSet cs;
    cs.k = 3;
    cs.linear.A1 = rows({{0, 0, 1}, {0, 0, -1}, {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}});
    cs.linear.b1 = vec({0.5, -0.5, 1, 1, 1, 1});
    SocConstraint s;
    s.M = rows({{1, 0, 0}, {0, 1, 0}});
    s.s = vec({0, 0});
    s.c = vec({0, 0, 2});
    s.d = 0.2;
    cs.socs.push_back(s);
    g.push_back({"hidden-plane-cone", cs, 2});
  }
  {  // cube with a corner cut off and a redundant face
    ConstraintSet cs;
    cs.k = 3;
    cs.linear.A1 = rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {-1, 0, 0}, {0, -1, 0}, {0, 0, -1}, {1, 1, 1}, {0, 0, 1}});
    cs.linear.b1 = vec({1, 1, 1, 1, 1, 1, 1.8, 2});
    g.push_back({"cut-cube", cs, 3});
  }
  {  // ellipsoid and a halfspace
    ConstraintSet cs;
    cs.k = 3;
    QuadraticConstraint q;
    q.P = Vector(vec({2.0, 0.5, 1.0})).asDiagonal();
    q.q = Vector::Zero(3);
    q.r = -1;
    cs.quadratics.push_back(q);
    cs.linear.A1 = rows({{1, 1, 0.5}});
    cs.linear.b1 = vec({0.8});
    g.push_back({"ellipsoid-halfspace", cs, 3});
  }
  {  // ice-cream cone truncated at height 2
    ConstraintSet cs;
    cs.k = 3;
    SocConstraint s;
    s.M = rows({{1, 0, 0}, {0, 1, 0}});
    s.s = vec({0, 0});
    s.c = vec({0, 0, 1});
    s.d = 0;
    cs.socs.push_back(s);
    cs.linear.A1 = rows({{0, 0, 1}});
    cs.linear.b1 = vec({2});
    g.push_back({"truncated-cone", cs, 3});
  }
  {  // 3x3 correlation matrices with off-diagonal entries y
    ConstraintSet cs;
    cs.k = 3;
    LmiConstraint L;
    L.F.push_back(detail::sym(3, {{0, 1, 1.0}}));
    L.F.push_back(detail::sym(3, {{0, 2, 1.0}}));
    L.F.push_back(detail::sym(3, {{1, 2, 1.0}}));
    L.F.push_back(Matrix::Identity(3, 3));
    cs.lmi = L;
    g.push_back({"elliptope", cs, 3});
  }
  {  // every family at once
    ConstraintSet cs;
    cs.k = 3;
    cs.linear.A1 = rows({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}});
    cs.linear.b1 = vec({1.2, 1.2, 1.2, 1.2, 1.2, 1.2});
    cs.quadratics.push_back(detail::ball(vec({0.1, 0, 0}), 1.4));
    SocConstraint s;
    s.M = rows({{1, 0, 0}, {0, 1, 0}});
    s.s = vec({0, 0});
    s.c = vec({0, 0, 0.6});
    s.d = 1.0;
    cs.socs.push_back(s);
    LmiConstraint L;
    L.F.push_back(detail::sym(2, {{0, 0, 1.0}, {1, 1, -1.0}}));
    L.F.push_back(detail::sym(2, {{0, 1, 1.0}}));
    L.F.push_back(detail::sym(2, {{0, 0, 0.3}}));
    L.F.push_back(Matrix::Identity(2, 2) * 1.1);
    cs.lmi = L;
    g.push_back({"mixed-all", cs, 3});
  }
  {  // untruncated cone: unbounded along its axis
    ConstraintSet cs;
    cs.k = 3;
    SocConstraint s;
    s.M = rows({{1, 0, 0}, {0, 1, 0}});
    s.s = vec({0, 0});
    s.c = vec({0, 0, 1});
    s.d = 0.5;
    cs.socs.push_back(s);
    cs.linear.A1 = rows({{0, 0, -1}});
    cs.linear.b1 = vec({1});
    g.push_back({"open-cone", cs, 3});
  }
  return g;
}

}  // namespace rayen
