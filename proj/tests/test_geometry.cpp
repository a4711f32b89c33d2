#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>
#include <set>
#include <vector>

#include "pwalyap/geometry.hpp"
#include "pwalyap/lp.hpp"

using namespace pwalyap;
using geom::Point;
using geom::Simplex;

namespace {

Point pt(std::initializer_list<double> c) {
  Point p(static_cast<int>(c.size()));
  int i = 0;
  for (double x : c) p[i++] = x;
  return p;
}

// Independent edge oracle: (i, j) is an edge iff some hyperplane supports the
// polytope exactly at {v_i, v_j} with positive clearance to all others.
bool edge_by_support(const std::vector<Point>& verts, int i, int j) {
  const int n = static_cast<int>(verts[0].size());
  lp::LinearProgram prog;
  prog.num_vars = n + 2;  // a, b, delta
  const int vb = n, vd = n + 1;
  prog.objective.push_back({vd, -1.0});
  auto dot_row = [&](const Point& v) {
    lp::LinearForm row;
    for (int d = 0; d < n; ++d) row.push_back({d, v[d]});
    return row;
  };
  for (int k = 0; k < static_cast<int>(verts.size()); ++k) {
    auto row = dot_row(verts[k]);
    row.push_back({vb, -1.0});
    if (k == i || k == j) {
      prog.add_constraint(std::move(row), lp::Relation::Equal, 0.0);
    } else {
      row.push_back({vd, 1.0});
      prog.add_constraint(std::move(row), lp::Relation::LessEq, 0.0);
    }
  }
  for (int d = 0; d < n; ++d) {
    prog.add_constraint({{d, 1.0}}, lp::Relation::LessEq, 1.0);
    prog.add_constraint({{d, 1.0}}, lp::Relation::GreaterEq, -1.0);
  }
  auto sol = lp::solve(prog);
  REQUIRE(sol.status == lp::SolveStatus::Optimal);
  return -sol.objective > 1e-7;
}

// Circumsphere of a simplex: solve 2 (v_i - v_0) . c = |v_i|^2 - |v_0|^2.
struct Sphere {
  Point center;
  double radius;
};

Sphere circumsphere(const std::vector<Point>& pts, const Simplex& s) {
  const int n = static_cast<int>(pts[0].size());
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd b(n);
  for (int r = 0; r < n; ++r) {
    A.row(r) = 2.0 * (pts[s.v[r + 1]] - pts[s.v[0]]).transpose();
    b[r] = pts[s.v[r + 1]].squaredNorm() - pts[s.v[0]].squaredNorm();
  }
  Sphere sp;
  sp.center = A.partialPivLu().solve(b);
  sp.radius = (pts[s.v[0]] - sp.center).norm();
  return sp;
}

void check_delaunay_properties(const std::vector<Point>& pts,
                               const std::vector<Simplex>& tris) {
  for (const Simplex& s : tris) {
    Sphere sp = circumsphere(pts, s);
    for (int q = 0; q < static_cast<int>(pts.size()); ++q) {
      if (std::find(s.v.begin(), s.v.end(), q) != s.v.end()) continue;
      const double dist = (pts[q] - sp.center).norm();
      const double violation = (sp.radius - dist) / std::max(1.0, sp.radius);
      CHECK_MESSAGE(violation <= 1e-8, "point ", q, " inside circumsphere by ", violation);
    }
  }
}

std::mt19937_64 g_rng(424242);

Point random_point(int n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Point p(n);
  for (int i = 0; i < n; ++i) p[i] = u(g_rng);
  return p;
}

}  // namespace

TEST_CASE("triangle edges: all vertex pairs") {
  std::vector<Point> tri = {pt({0, 0}), pt({1, 0}), pt({0, 1})};
  auto edges = geom::edges_of_cell(tri, false);
  CHECK(edges.size() == 3);
}

TEST_CASE("square edges: diagonals excluded, matches the support oracle") {
  std::vector<Point> sq = {pt({0, 0}), pt({1, 0}), pt({1, 1}), pt({0, 1})};
  auto edges = geom::edges_of_cell(sq, false);
  CHECK(edges.size() == 4);
  std::set<std::pair<int, int>> got(edges.begin(), edges.end());
  CHECK(got.count({0, 2}) == 0);  // diagonal
  CHECK(got.count({1, 3}) == 0);
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      CHECK(edge_by_support(sq, i, j) == (got.count({i, j}) > 0));
    }
  }
}

TEST_CASE("origin-touching edges can be excluded") {
  std::vector<Point> tri = {pt({0, 0}), pt({1, 0}), pt({0, 1})};
  auto edges = geom::edges_of_cell(tri, true);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0] == std::pair<int, int>{1, 2});
}

TEST_CASE("longest edge selection and tie-breaks") {
  std::vector<Point> tri = {pt({0, 0}), pt({3, 0}), pt({0, 1})};
  auto e = geom::longest_edge(tri, {0, 1, 2}, false);
  CHECK(e == std::pair<int, int>{1, 2});  // length sqrt(10)

  std::vector<Point> sq = {pt({0, 0}), pt({1, 0}), pt({1, 1}), pt({0, 1})};
  auto t = geom::longest_edge(sq, {10, 11, 12, 13}, false);
  CHECK(t == std::pair<int, int>{0, 1});  // all length 1; smallest id pair

  std::vector<Point> seg_cell = {pt({-1, 0}), pt({0, 0}), pt({1, 0}), pt({0, 1})};
  // every edge of the 2-simplex {(-1,0),(1,0)} through origin... use a triangle
  std::vector<Point> tri0 = {pt({-1, 0}), pt({0, 0}), pt({1, 0})};
  (void)seg_cell;
  CHECK_THROWS_AS(geom::longest_edge({pt({0, 0}), pt({1, 0})}, {0, 1}, true), Error);
}

TEST_CASE("delaunay: a simplex triangulates itself") {
  std::vector<Point> tri = {pt({0, 0}), pt({1, 0}), pt({0, 1})};
  auto dt = geom::delaunay(tri);
  REQUIRE(dt.size() == 1);
  CHECK(dt[0].v == std::vector<int>{0, 1, 2});
}

TEST_CASE("delaunay: interior point joins every triangle") {
  std::vector<Point> pts = {pt({0, 0}), pt({2, 0}), pt({0, 2}), pt({0.5, 0.5})};
  auto dt = geom::delaunay(pts);
  REQUIRE(dt.size() == 3);
  for (const Simplex& s : dt) {
    CHECK(std::find(s.v.begin(), s.v.end(), 3) != s.v.end());
  }
  check_delaunay_properties(pts, dt);
}

TEST_CASE("delaunay: cocircular square resolves along the documented diagonal") {
  std::vector<Point> sq = {pt({0, 0}), pt({1, 0}), pt({1, 1}), pt({0, 1})};
  auto dt = geom::delaunay(sq);
  REQUIRE(dt.size() == 2);
  // fan from the lowest-index vertex: diagonal (0,0)-(1,1)
  CHECK(dt[0].v == std::vector<int>{0, 1, 2});
  CHECK(dt[1].v == std::vector<int>{0, 2, 3});
  check_delaunay_properties(sq, dt);
}

TEST_CASE("delaunay rejects degenerate point sets") {
  std::vector<Point> line = {pt({0, 0}), pt({1, 1}), pt({2, 2})};
  CHECK_THROWS_AS(geom::delaunay(line), Error);
}

TEST_CASE("delaunay properties on random sets with known hull volume") {
  int sets = 0;
  for (int n = 2; n <= 4; ++n) {
    const int per_dim = n == 2 ? 34 : (n == 3 ? 33 : 33);
    for (int trial = 0; trial < per_dim; ++trial) {
      // box corners (known hull) plus a few interior points
      std::vector<double> lo(n), hi(n);
      for (int d = 0; d < n; ++d) {
        lo[d] = -1.0 - std::uniform_real_distribution<double>(0, 1)(g_rng);
        hi[d] = 1.0 + std::uniform_real_distribution<double>(0, 1)(g_rng);
      }
      std::vector<Point> pts;
      for (int mask = 0; mask < (1 << n); ++mask) {
        Point p(n);
        for (int d = 0; d < n; ++d) p[d] = (mask >> d) & 1 ? hi[d] : lo[d];
        pts.push_back(p);
      }
      const int extra = n == 4 ? 2 : 4;
      for (int k = 0; k < extra; ++k) {
        Point p(n);
        for (int d = 0; d < n; ++d)
          p[d] = std::uniform_real_distribution<double>(lo[d] + 0.1, hi[d] - 0.1)(g_rng);
        pts.push_back(p);
      }
      auto dt = geom::delaunay(pts);
      check_delaunay_properties(pts, dt);
      double vol = 0.0, box = 1.0;
      for (const Simplex& s : dt) vol += geom::simplex_volume(pts, s);
      for (int d = 0; d < n; ++d) box *= hi[d] - lo[d];
      CHECK(std::abs(vol - box) / box <= 1e-8);
      ++sets;

      // determinism
      auto dt2 = geom::delaunay(pts);
      REQUIRE(dt.size() == dt2.size());
      for (std::size_t i = 0; i < dt.size(); ++i) CHECK(dt[i].v == dt2[i].v);
    }
  }
  CHECK(sets >= 100);
}

TEST_CASE("edge enumeration matches the adjacency oracle on random polytopes") {
  for (int n = 2; n <= 3; ++n) {
    for (int trial = 0; trial < 12; ++trial) {
      // points on a sphere are in convex position
      const int m = 5 + static_cast<int>(std::uniform_int_distribution<int>(0, 3)(g_rng));
      std::vector<Point> verts;
      while (static_cast<int>(verts.size()) < m) {
        Point p = random_point(n, -1, 1);
        if (p.norm() < 1e-3) continue;
        p.normalize();
        bool dup = false;
        for (const Point& q : verts) dup |= (q - p).norm() < 1e-2;
        if (!dup) verts.push_back(p);
      }
      auto edges = geom::edges_of_cell(verts, false);
      std::set<std::pair<int, int>> got(edges.begin(), edges.end());
      for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
          CHECK_MESSAGE(edge_by_support(verts, i, j) == (got.count({i, j}) > 0),
                        "n=", n, " trial=", trial, " pair=(", i, ",", j, ")");
        }
      }
    }
  }
}

TEST_CASE("triangulate cell with new vertices") {
  std::vector<Point> tri = {pt({0, 0}), pt({2, 0}), pt({0, 2})};

  SUBCASE("midpoint of an edge gives two sub-triangles") {
    auto dt = geom::triangulate_cell_with_new_vertices(tri, {pt({1, 1})});
    CHECK(dt.size() == 2);
    for (const Simplex& s : dt) {
      CHECK(std::find(s.v.begin(), s.v.end(), 3) != s.v.end());
      std::vector<Point> all = tri;
      all.push_back(pt({1, 1}));
      for (int idx : s.v) CHECK(geom::contains_point(tri, all[idx]));
    }
  }
  SUBCASE("no new vertices on a simplex returns the cell unchanged") {
    auto dt = geom::triangulate_cell_with_new_vertices(tri, {});
    REQUIRE(dt.size() == 1);
    CHECK(dt[0].v == std::vector<int>{0, 1, 2});
  }
  SUBCASE("quadrilateral with a boundary midpoint") {
    std::vector<Point> quad = {pt({0, 0}), pt({2, 0}), pt({2, 2}), pt({0, 2})};
    auto dt = geom::triangulate_cell_with_new_vertices(quad, {pt({1, 0})});
    double vol = 0.0;
    std::vector<Point> all = quad;
    all.push_back(pt({1, 0}));
    for (const Simplex& s : dt) vol += geom::simplex_volume(all, s);
    CHECK(vol == doctest::Approx(4.0));
    check_delaunay_properties(all, dt);
  }
  SUBCASE("vertex outside the cell is rejected") {
    CHECK_THROWS_AS(geom::triangulate_cell_with_new_vertices(tri, {pt({5, 5})}), Error);
  }
}

TEST_CASE("contains_point on the unit triangle") {
  std::vector<Point> tri = {pt({0, 0}), pt({1, 0}), pt({0, 1})};
  CHECK(geom::contains_point(tri, pt({0.2, 0.2})));
  CHECK_FALSE(geom::contains_point(tri, pt({1, 1})));
  CHECK(geom::contains_point(tri, pt({0.5, 0})));  // closed cells include the boundary
}

TEST_CASE("support gap sign convention") {
  std::vector<Point> tri = {pt({0, 0}), pt({1, 0}), pt({0, 1})};
  CHECK(std::abs(geom::support_gap(tri, pt({0.2, 0.2}))) <= 1e-7);
  CHECK(std::abs(geom::support_gap(tri, pt({0.5, 0}))) <= 1e-7);
  CHECK(geom::support_gap(tri, pt({2, 0})) > 1e-3);
}

TEST_CASE("boundary classification") {
  std::vector<Point> tri = {pt({0, 0}), pt({1, 0}), pt({0, 1})};
  CHECK(geom::on_boundary(tri, pt({0.5, 0})));
  CHECK(geom::on_boundary(tri, pt({0, 0})));           // vertices are boundary points
  CHECK_FALSE(geom::on_boundary(tri, pt({0.2, 0.2})));  // interior
  CHECK_FALSE(geom::on_boundary(tri, pt({2, 2})));      // outside
}

TEST_CASE("interior overlap classification") {
  std::vector<Point> a = {pt({0, 0}), pt({1, 0}), pt({0, 1})};
  std::vector<Point> b = {pt({1, 0}), pt({0, 1}), pt({1, 1})};   // shares a facet
  std::vector<Point> c = {pt({0.2, 0.2}), pt({1, 0.2}), pt({0.2, 1})};  // overlaps a
  CHECK_FALSE(geom::interiors_overlap(a, b));
  CHECK(geom::interiors_overlap(a, c));
}

TEST_CASE("vertex store dedups within tolerance") {
  geom::VertexStore store(2);
  auto a = store.intern(pt({0, 0}));
  auto b = store.intern(pt({1e-9, 0}));
  auto c = store.intern(pt({1, 0}));
  CHECK(a == b);
  CHECK(a != c);
  CHECK(store.size() == 2);
}
