#include "pwalyap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pwalyap/lp.hpp"

namespace pwalyap::geom {

namespace {

double det(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) return m(0, 0);
  if (m.rows() == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return m.partialPivLu().determinant();
}

}  // namespace

bool is_origin(const Point& p, double tol) { return p.norm() <= tol; }

VertexId VertexStore::intern(const Point& p) {
  if (!p.allFinite()) fail(Errc::degenerate_point_set, "non-finite vertex coordinates");
  if (dim_ == 0) dim_ = static_cast<int>(p.size());
  if (p.size() != dim_) fail(Errc::degenerate_point_set, "vertex dimension mismatch");
  if (auto id = find(p)) return *id;
  pts_.push_back(p);
  return static_cast<VertexId>(pts_.size() - 1);
}

std::optional<VertexId> VertexStore::find(const Point& p) const {
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    if ((pts_[i] - p).norm() <= kDedupTol) return static_cast<VertexId>(i);
  }
  return std::nullopt;
}

int affine_rank(const std::vector<Point>& pts) {
  if (pts.size() <= 1) return 0;
  const int n = static_cast<int>(pts[0].size());
  Eigen::MatrixXd M(n, pts.size() - 1);
  for (std::size_t i = 1; i < pts.size(); ++i) M.col(i - 1) = pts[i] - pts[0];
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  qr.setThreshold(kDegenTol);
  return static_cast<int>(qr.rank());
}

// ---------------------------------------------------------------------------
// Edge enumeration: (vj, vk) is a 1-face iff the midpoint cannot place any
// convex weight on the remaining vertices.
// ---------------------------------------------------------------------------

namespace {

bool pair_is_edge(const std::vector<Point>& verts, int j, int k) {
  const int n = static_cast<int>(verts[0].size());
  const int m = static_cast<int>(verts.size());
  const Point mid = 0.5 * (verts[j] + verts[k]);

  lp::LinearProgram prog;
  prog.num_vars = m;
  prog.lower_bounds.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    if (i != j && i != k) prog.objective.push_back({i, -1.0});  // maximize weight on others
  }
  for (int d = 0; d < n; ++d) {
    lp::LinearForm row;
    for (int i = 0; i < m; ++i) row.push_back({i, verts[i][d]});
    prog.add_constraint(std::move(row), lp::Relation::Equal, mid[d]);
  }
  lp::LinearForm ones;
  for (int i = 0; i < m; ++i) ones.push_back({i, 1.0});
  prog.add_constraint(std::move(ones), lp::Relation::Equal, 1.0);

  auto sol = lp::solve(prog);
  if (sol.status != lp::SolveStatus::Optimal) return false;  // midpoint not representable
  return -sol.objective <= 1e-7;
}

}  // namespace

std::vector<std::pair<int, int>> edges_of_cell(const std::vector<Point>& verts,
                                               bool exclude_origin) {
  if (verts.size() < 2) fail(Errc::degenerate_cell, "fewer than two vertices");
  if (affine_rank(verts) < 1) fail(Errc::degenerate_cell, "vertices coincide");
  const int n = static_cast<int>(verts[0].size());
  const bool simplex = static_cast<int>(verts.size()) <= n + 1;

  std::vector<std::pair<int, int>> edges;
  for (int j = 0; j < static_cast<int>(verts.size()); ++j) {
    for (int k = j + 1; k < static_cast<int>(verts.size()); ++k) {
      if (exclude_origin && (is_origin(verts[j]) || is_origin(verts[k]))) continue;
      if (simplex || pair_is_edge(verts, j, k)) edges.push_back({j, k});
    }
  }
  return edges;
}

std::pair<int, int> longest_edge(const std::vector<Point>& verts,
                                 const std::vector<VertexId>& ids, bool exclude_origin) {
  auto edges = edges_of_cell(verts, exclude_origin);
  if (edges.empty()) fail(Errc::no_eligible_edge, "every edge touches the origin");
  int best = -1;
  double best_len = -1.0;
  auto key = [&](int e) {
    Edge ed(ids[edges[e].first], ids[edges[e].second]);
    return ed;
  };
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    const double len = (verts[edges[e].first] - verts[edges[e].second]).norm();
    if (best < 0 || len > best_len + 1e-9 * (1.0 + best_len)) {
      best = e;
      best_len = len;
    } else if (len > best_len - 1e-9 * (1.0 + best_len) && key(e) < key(best)) {
      best = e;  // tie: lexicographically smallest id pair
    }
  }
  return edges[best];
}

// ---------------------------------------------------------------------------
// Delaunay triangulation. A candidate (n+1)-subset is accepted iff it is a
// lower-hull facet of the lifted points, i.e. no other lifted point lies
// strictly below its hyperplane. Heights carry a symbolic perturbation
// h_i = |x_i|^2 - delta_{rank_i} with delta_0 >> delta_1 >> ... > 0, evaluated
// exactly through the linear expansion of the determinant, so cospherical
// shells resolve deterministically (fanned from the lowest rank).
// ---------------------------------------------------------------------------

namespace {

struct LiftedPredicate {
  const std::vector<Point>& pts;      // centered/scaled
  const std::vector<double>& height;  // |x|^2 in scaled coordinates
  const std::vector<long>& rank;
  int n;

  // True when pts[q] lies strictly below the lifted hyperplane of subset S
  // (equivalently: strictly inside the perturbed circumsphere).
  bool below(const std::vector<int>& S, int q) const {
    const int rows = n + 1;
    Eigen::MatrixXd M(rows, rows);
    const Point& base = pts[S[0]];
    const double hbase = height[S[0]];
    for (int r = 0; r < n; ++r) {
      M.row(r).head(n) = (pts[S[r + 1]] - base).transpose();
      M(r, n) = height[S[r + 1]] - hbase;
    }
    M.row(n).head(n) = (pts[q] - base).transpose();
    M(n, n) = height[q] - hbase;

    // Base orientation fixes which determinant sign means "below".
    Eigen::MatrixXd B(n, n);
    for (int r = 0; r < n; ++r) B.row(r) = M.row(r).head(n);
    const double orient = det(B);
    const double osign = orient >= 0 ? 1.0 : -1.0;

    const double d0 = det(M);
    const double tol = 1e-12;
    if (std::abs(d0) > tol) return osign * d0 < 0.0;

    // Tie: expand in the height perturbations. The coefficient of delta_j is
    // -kappa_j for each non-base participant and +sum(kappa) for the base,
    // where kappa_r is the cofactor of the height entry in row r.
    Eigen::VectorXd kappa(rows);
    double ksum = 0.0;
    for (int r = 0; r < rows; ++r) {
      Eigen::MatrixXd Mr(rows - 1, rows - 1);
      int rr = 0;
      for (int i = 0; i < rows; ++i) {
        if (i == r) continue;
        Mr.row(rr++) = M.row(i).head(n);
      }
      const double sign = ((r + rows - 1) % 2 == 0) ? 1.0 : -1.0;  // (-1)^{r + last col}
      kappa[r] = sign * det(Mr);
      ksum += kappa[r];
    }

    // Participants in ascending rank order: strongest perturbation decides.
    struct Part {
      long rk;
      double coef;
    };
    std::vector<Part> parts;
    parts.push_back({rank[S[0]], ksum});
    for (int r = 0; r < n; ++r) parts.push_back({rank[S[r + 1]], -kappa[r]});
    parts.push_back({rank[q], -kappa[n]});
    std::sort(parts.begin(), parts.end(), [](const Part& a, const Part& b) { return a.rk < b.rk; });
    for (const Part& p : parts) {
      if (std::abs(p.coef) > tol) return osign * p.coef < 0.0;
    }
    return false;  // fully degenerate: never treated as below
  }
};

}  // namespace

std::vector<Simplex> delaunay(const std::vector<Point>& pts, const std::vector<long>& tie_rank) {
  const int N = static_cast<int>(pts.size());
  if (N == 0) fail(Errc::degenerate_point_set, "no points");
  const int n = static_cast<int>(pts[0].size());
  if (N < n + 1) fail(Errc::degenerate_point_set, "need at least n+1 points");
  for (const Point& p : pts) {
    if (static_cast<int>(p.size()) != n || !p.allFinite())
      fail(Errc::degenerate_point_set, "bad point");
  }
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      if ((pts[i] - pts[j]).norm() <= kDedupTol)
        fail(Errc::degenerate_point_set, "duplicate points " + std::to_string(i) + "," +
                                             std::to_string(j));
    }
  }
  if (affine_rank(pts) < n) fail(Errc::degenerate_point_set, "points lie on a hyperplane");

  std::vector<long> rank(N);
  if (tie_rank.empty()) {
    for (int i = 0; i < N; ++i) rank[i] = i;
  } else {
    if (static_cast<int>(tie_rank.size()) != N)
      fail(Errc::degenerate_point_set, "tie_rank size mismatch");
    rank = tie_rank;
  }

  // Center and scale for conditioning of the determinants.
  Point c = Point::Zero(n);
  for (const Point& p : pts) c += p;
  c /= N;
  double scale = 0.0;
  for (const Point& p : pts) scale = std::max(scale, (p - c).norm());
  if (scale <= 0) scale = 1.0;
  std::vector<Point> w(N);
  std::vector<double> height(N);
  for (int i = 0; i < N; ++i) {
    w[i] = (pts[i] - c) / scale;
    height[i] = w[i].squaredNorm();
  }

  LiftedPredicate pred{w, height, rank, n};

  std::vector<Simplex> out;
  std::vector<int> S(n + 1);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n + 1) {
      // base must be full-dimensional
      std::vector<Point> sub;
      sub.reserve(n + 1);
      for (int id : S) sub.push_back(w[id]);
      Eigen::MatrixXd B(n, n);
      for (int r = 0; r < n; ++r) B.row(r) = (sub[r + 1] - sub[0]).transpose();
      if (std::abs(det(B)) <= kDegenTol) return;
      for (int q = 0; q < N; ++q) {
        if (std::find(S.begin(), S.end(), q) != S.end()) continue;
        if (pred.below(S, q)) return;
      }
      Simplex s;
      s.v = S;
      out.push_back(std::move(s));
      return;
    }
    for (int i = start; i <= N - (n + 1 - depth); ++i) {
      S[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);

  std::sort(out.begin(), out.end(), [](const Simplex& a, const Simplex& b) { return a.v < b.v; });
  if (out.empty()) fail(Errc::degenerate_point_set, "no full-dimensional simplices");
  return out;
}

std::vector<Simplex> triangulate_cell_with_new_vertices(const std::vector<Point>& cell,
                                                        const std::vector<Point>& extra,
                                                        const std::vector<long>& tie_rank) {
  for (std::size_t i = 0; i < extra.size(); ++i) {
    if (support_gap(cell, extra[i]) > kBoundaryTol)
      fail(Errc::vertex_outside_cell, "new vertex " + std::to_string(i) + " outside the cell");
  }
  std::vector<Point> all = cell;
  all.insert(all.end(), extra.begin(), extra.end());
  if (extra.empty()) {
    const int n = static_cast<int>(cell[0].size());
    if (static_cast<int>(cell.size()) == n + 1 && affine_rank(cell) == n) {
      Simplex s;
      for (int i = 0; i <= n; ++i) s.v.push_back(i);
      return {s};
    }
  }
  return delaunay(all, tie_rank);
}

// ---------------------------------------------------------------------------
// Membership, support and separation LPs.
// ---------------------------------------------------------------------------

bool contains_point(const std::vector<Point>& verts, const Point& x, double tol) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(verts.size());
  if (m == 0) return false;

  if (m == n + 1 && affine_rank(verts) == n) {
    // barycentric fast path
    Eigen::MatrixXd A(n, n);
    for (int j = 1; j <= n; ++j) A.col(j - 1) = verts[j] - verts[0];
    Eigen::VectorXd lam = A.partialPivLu().solve(x - verts[0]);
    double lo = 1.0 - lam.sum();
    for (int j = 0; j < n; ++j) lo = std::min(lo, lam[j]);
    const double span = 1.0 + x.cwiseAbs().maxCoeff();
    return lo >= -tol * span;
  }

  // min |residual|_1 over convex combinations
  lp::LinearProgram prog;
  prog.num_vars = m + 2 * n;  // lambda, u, w
  prog.lower_bounds.assign(prog.num_vars, 0.0);
  for (int d = 0; d < n; ++d) {
    prog.objective.push_back({m + d, 1.0});
    prog.objective.push_back({m + n + d, 1.0});
  }
  for (int d = 0; d < n; ++d) {
    lp::LinearForm row;
    for (int i = 0; i < m; ++i) row.push_back({i, verts[i][d]});
    row.push_back({m + d, 1.0});
    row.push_back({m + n + d, -1.0});
    prog.add_constraint(std::move(row), lp::Relation::Equal, x[d]);
  }
  lp::LinearForm ones;
  for (int i = 0; i < m; ++i) ones.push_back({i, 1.0});
  prog.add_constraint(std::move(ones), lp::Relation::Equal, 1.0);
  auto sol = lp::solve(prog);
  if (sol.status != lp::SolveStatus::Optimal) return false;
  return sol.objective <= tol * (1.0 + x.cwiseAbs().maxCoeff());
}

double support_gap(const std::vector<Point>& verts, const Point& x) {
  const int n = static_cast<int>(x.size());
  // vars: h (n, in [-1,1]), s free; maximize h.x - s with s >= h.v_i.
  // Zero inside or on the hull, positive (a gauge distance) outside.
  lp::LinearProgram prog;
  prog.num_vars = n + 1;
  for (int d = 0; d < n; ++d) prog.objective.push_back({d, -x[d]});
  prog.objective.push_back({n, 1.0});
  for (const Point& v : verts) {
    lp::LinearForm row;
    for (int d = 0; d < n; ++d) row.push_back({d, v[d]});
    row.push_back({n, -1.0});
    prog.add_constraint(std::move(row), lp::Relation::LessEq, 0.0);
  }
  for (int d = 0; d < n; ++d) {
    prog.add_constraint({{d, 1.0}}, lp::Relation::LessEq, 1.0);
    prog.add_constraint({{d, 1.0}}, lp::Relation::GreaterEq, -1.0);
  }
  auto sol = lp::solve(prog);
  if (sol.status != lp::SolveStatus::Optimal)
    fail(Errc::degenerate_cell, "support LP failed: " + std::string(lp::to_string(sol.status)));
  return -sol.objective;
}

namespace {

Point centroid(const std::vector<Point>& pts) {
  Point c = Point::Zero(pts[0].size());
  for (const Point& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

}  // namespace

bool on_boundary(const std::vector<Point>& verts, const Point& x, double tol) {
  if (!contains_point(verts, x, tol)) return false;
  // x is a boundary point iff a hyperplane supports the cell at x. The
  // centroid is strictly interior, so h.(x - centroid) = 1 is a valid
  // normalization for any supporting h.
  const int n = static_cast<int>(x.size());
  const Point c = centroid(verts);
  lp::LinearProgram prog;
  prog.num_vars = n;
  for (const Point& v : verts) {
    lp::LinearForm row;
    for (int d = 0; d < n; ++d) row.push_back({d, v[d] - x[d]});
    prog.add_constraint(std::move(row), lp::Relation::LessEq, 0.0);
  }
  lp::LinearForm norm;
  for (int d = 0; d < n; ++d) norm.push_back({d, x[d] - c[d]});
  prog.add_constraint(std::move(norm), lp::Relation::Equal, 1.0);
  auto sol = lp::solve(prog);
  return sol.status == lp::SolveStatus::Optimal;
}

bool interiors_overlap(const std::vector<Point>& a, const std::vector<Point>& b, double tol) {
  (void)tol;
  // Full-dimensional convex cells have disjoint interiors iff a (possibly
  // touching) separating hyperplane exists; such an h satisfies
  // h.(centroid_b - centroid_a) > 0, so normalizing that product to 1 turns
  // separability into LP feasibility.
  const int n = static_cast<int>(a[0].size());
  const Point ca = centroid(a), cb = centroid(b);
  lp::LinearProgram prog;
  prog.num_vars = n + 1;  // h, offset
  const int vb0 = n;
  for (const Point& u : a) {
    lp::LinearForm row;
    for (int d = 0; d < n; ++d) row.push_back({d, u[d]});
    row.push_back({vb0, -1.0});
    prog.add_constraint(std::move(row), lp::Relation::LessEq, 0.0);
  }
  for (const Point& v : b) {
    lp::LinearForm row;
    for (int d = 0; d < n; ++d) row.push_back({d, v[d]});
    row.push_back({vb0, -1.0});
    prog.add_constraint(std::move(row), lp::Relation::GreaterEq, 0.0);
  }
  lp::LinearForm norm;
  for (int d = 0; d < n; ++d) norm.push_back({d, cb[d] - ca[d]});
  prog.add_constraint(std::move(norm), lp::Relation::Equal, 1.0);
  auto sol = lp::solve(prog);
  return sol.status != lp::SolveStatus::Optimal;
}

double simplex_volume(const std::vector<Point>& pts, const Simplex& s) {
  const int n = static_cast<int>(pts[0].size());
  Eigen::MatrixXd M(n, n);
  for (int r = 0; r < n; ++r) M.row(r) = (pts[s.v[r + 1]] - pts[s.v[0]]).transpose();
  double fact = 1.0;
  for (int k = 2; k <= n; ++k) fact *= k;
  return std::abs(det(M)) / fact;
}

double convex_volume(const std::vector<Point>& pts) {
  double vol = 0.0;
  for (const Simplex& s : delaunay(pts)) vol += simplex_volume(pts, s);
  return vol;
}

}  // namespace pwalyap::geom
