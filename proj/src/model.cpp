#include "pwalyap/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pwalyap::model {

namespace {

constexpr double kContinuityTol = 1e-6;

struct Aabb {
  Point lo, hi;
  bool contains(const Point& x, double tol) const {
    for (int d = 0; d < x.size(); ++d) {
      if (x[d] < lo[d] - tol || x[d] > hi[d] + tol) return false;
    }
    return true;
  }
  bool intersects(const Aabb& o, double tol) const {
    for (int d = 0; d < lo.size(); ++d) {
      if (hi[d] < o.lo[d] - tol || o.hi[d] < lo[d] - tol) return false;
    }
    return true;
  }
};

Aabb cell_aabb(const Partition& part, const Cell& c) {
  Aabb box;
  box.lo = part.vertices.point(c.vertices[0]);
  box.hi = box.lo;
  for (VertexId v : c.vertices) {
    const Point& p = part.vertices.point(v);
    box.lo = box.lo.cwiseMin(p);
    box.hi = box.hi.cwiseMax(p);
  }
  return box;
}

}  // namespace

const LyapunovCandidate::Piece& LyapunovCandidate::piece_for(int cell_id) const {
  for (const Piece& pc : pieces) {
    if (pc.cell_id == cell_id) return pc;
  }
  fail(Errc::invalid_partition, "no candidate piece for cell " + std::to_string(cell_id));
}

const char* to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::cell_structure: return "cell-structure";
    case Violation::Kind::origin_flag: return "origin-flag";
    case Violation::Kind::origin_law_offset: return "origin-law-offset";
    case Violation::Kind::interior_overlap: return "interior-overlap";
    case Violation::Kind::shared_vertex_closure: return "shared-vertex-closure";
    case Violation::Kind::dynamics_continuity: return "dynamics-continuity";
    case Violation::Kind::origin_not_vertex: return "origin-not-vertex";
  }
  return "?";
}

bool has_errors(const std::vector<Violation>& vs) {
  for (const Violation& v : vs)
    if (v.severity == Severity::Error) return true;
  return false;
}

Point eval_dynamics(const Cell& cell, const Point& v) { return cell.law.A * v + cell.law.a; }

double eval_vdot(const LyapunovCandidate& cand, const Cell& cell, const Point& v) {
  return cand.piece_for(cell.id).p.dot(eval_dynamics(cell, v));
}

std::vector<Violation> validate_partition(const Partition& part) {
  std::vector<Violation> out;
  const int n = part.dimension;
  auto add = [&](Violation::Kind k, Severity s, std::string msg, std::vector<int> cells,
                 double residual = 0.0) {
    out.push_back({k, s, std::move(msg), std::move(cells), residual});
  };

  // Per-cell structure.
  std::set<int> ids;
  for (const Cell& c : part.cells) {
    if (!ids.insert(c.id).second)
      add(Violation::Kind::cell_structure, Severity::Error, "duplicate cell id", {c.id});
    if (static_cast<int>(c.vertices.size()) < n + 1) {
      add(Violation::Kind::cell_structure, Severity::Error,
          "cell has fewer than n+1 vertices", {c.id});
      continue;
    }
    bool bad_ref = false;
    for (VertexId v : c.vertices) bad_ref |= (v < 0 || v >= part.vertices.size());
    if (bad_ref) {
      add(Violation::Kind::cell_structure, Severity::Error, "vertex index out of range", {c.id});
      continue;
    }
    if (c.law.A.rows() != n || c.law.A.cols() != n || c.law.a.size() != n ||
        !c.law.A.allFinite() || !c.law.a.allFinite()) {
      add(Violation::Kind::cell_structure, Severity::Error, "malformed affine law", {c.id});
      continue;
    }
    const auto pts = part.cell_points(c);
    if (geom::affine_rank(pts) < n)
      add(Violation::Kind::cell_structure, Severity::Error, "cell is not full-dimensional",
          {c.id});

    bool has_origin_vertex = false;
    for (VertexId v : c.vertices) has_origin_vertex |= geom::is_origin(part.vertices.point(v));
    if (has_origin_vertex != c.contains_origin)
      add(Violation::Kind::origin_flag, Severity::Error,
          "contains_origin flag disagrees with the vertex set", {c.id});
    if (has_origin_vertex && c.law.a.size() == n && c.law.a.lpNorm<Eigen::Infinity>() > kContinuityTol)
      add(Violation::Kind::origin_law_offset, Severity::Warning,
          "cell touching the origin has a nonzero affine term", {c.id},
          c.law.a.lpNorm<Eigen::Infinity>());
  }
  if (has_errors(out)) return out;  // geometric checks assume sane cells

  const int m = static_cast<int>(part.cells.size());
  std::vector<Aabb> boxes;
  boxes.reserve(m);
  for (const Cell& c : part.cells) boxes.push_back(cell_aabb(part, c));

  // Pairwise interior overlaps (AABB prefilter, parallel sweep).
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (boxes[i].intersects(boxes[j], geom::kBoundaryTol)) pairs.push_back({i, j});
    }
  }
  std::vector<char> overlap(pairs.size(), 0);
  {
    const long np = static_cast<long>(pairs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8)
#endif
    for (long k = 0; k < np; ++k) {
      const auto pts_i = part.cell_points(part.cells[pairs[k].first]);
      const auto pts_j = part.cell_points(part.cells[pairs[k].second]);
      overlap[k] = geom::interiors_overlap(pts_i, pts_j) ? 1 : 0;
    }
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (overlap[k])
      add(Violation::Kind::interior_overlap, Severity::Error, "cell interiors intersect",
          {part.cells[pairs[k].first].id, part.cells[pairs[k].second].id});
  }

  // Vertex incidence by id.
  std::vector<std::vector<int>> incident(part.vertices.size());
  for (int ci = 0; ci < m; ++ci) {
    for (VertexId v : part.cells[ci].vertices) incident[v].push_back(ci);
  }

  // Shared-vertex closure: a vertex lying in a cell must be one of its
  // vertices.
  struct ClosureHit {
    int vertex;
    int cell;
  };
  std::vector<ClosureHit> closure_hits;
  {
    std::vector<std::vector<ClosureHit>> hits_tl;
#ifdef _OPENMP
    hits_tl.resize(omp_get_max_threads());
#pragma omp parallel
#else
    hits_tl.resize(1);
#endif
    {
#ifdef _OPENMP
      const int tid = omp_get_thread_num();
#pragma omp for schedule(dynamic, 16)
#else
      const int tid = 0;
#endif
      for (int v = 0; v < part.vertices.size(); ++v) {
        const Point& p = part.vertices.point(v);
        for (int ci = 0; ci < m; ++ci) {
          if (!boxes[ci].contains(p, geom::kBoundaryTol)) continue;
          const auto& vs = part.cells[ci].vertices;
          if (std::find(vs.begin(), vs.end(), v) != vs.end()) continue;
          if (geom::contains_point(part.cell_points(part.cells[ci]), p))
            hits_tl[tid].push_back({v, ci});
        }
      }
    }
    for (const auto& local : hits_tl)
      closure_hits.insert(closure_hits.end(), local.begin(), local.end());
    std::sort(closure_hits.begin(), closure_hits.end(),
              [](const ClosureHit& a, const ClosureHit& b) {
                return a.vertex != b.vertex ? a.vertex < b.vertex : a.cell < b.cell;
              });
  }
  for (const ClosureHit& h : closure_hits) {
    add(Violation::Kind::shared_vertex_closure, Severity::Error,
        "vertex " + std::to_string(h.vertex) + " lies in a cell without being its vertex",
        {part.cells[h.cell].id});
  }

  // Dynamics continuity at shared vertices.
  for (int v = 0; v < part.vertices.size(); ++v) {
    const auto& inc = incident[v];
    const Point& p = part.vertices.point(v);
    for (std::size_t x = 0; x < inc.size(); ++x) {
      for (std::size_t y = x + 1; y < inc.size(); ++y) {
        const Cell& ca = part.cells[inc[x]];
        const Cell& cb = part.cells[inc[y]];
        const double res = (eval_dynamics(ca, p) - eval_dynamics(cb, p)).lpNorm<Eigen::Infinity>();
        if (res > kContinuityTol)
          add(Violation::Kind::dynamics_continuity, Severity::Warning,
              "vector field mismatch at vertex " + std::to_string(v), {ca.id, cb.id}, res);
      }
    }
  }

  // Origin placement.
  const Point origin = Point::Zero(n);
  for (int ci = 0; ci < m; ++ci) {
    if (part.cells[ci].contains_origin) continue;
    if (!boxes[ci].contains(origin, geom::kBoundaryTol)) continue;
    if (geom::contains_point(part.cell_points(part.cells[ci]), origin))
      add(Violation::Kind::origin_not_vertex, Severity::Warning,
          "origin lies in the cell but is not one of its vertices; run ensure-origin",
          {part.cells[ci].id});
  }
  return out;
}

AffineLaw discrete_to_continuous(const AffineLaw& law, double t_s) {
  if (!(t_s > 0)) fail(Errc::nonpositive_sampling_time, "t_s must be positive");
  AffineLaw out;
  out.A = (law.A - Eigen::MatrixXd::Identity(law.A.rows(), law.A.cols())) / t_s;
  out.a = law.a / t_s;
  return out;
}

Partition ensure_origin_vertex(const Partition& part) {
  const Point origin = Point::Zero(part.dimension);
  std::vector<int> offenders;
  for (int ci = 0; ci < static_cast<int>(part.cells.size()); ++ci) {
    const Cell& c = part.cells[ci];
    if (c.contains_origin) continue;
    bool has_origin_vertex = false;
    for (VertexId v : c.vertices) has_origin_vertex |= geom::is_origin(part.vertices.point(v));
    if (has_origin_vertex) continue;
    if (geom::contains_point(part.cell_points(c), origin)) offenders.push_back(ci);
  }
  bool origin_anywhere = !offenders.empty();
  for (const Cell& c : part.cells) origin_anywhere |= c.contains_origin;
  if (!origin_anywhere) {
    for (const Cell& c : part.cells) {
      for (VertexId v : c.vertices) origin_anywhere |= geom::is_origin(part.vertices.point(v));
    }
  }
  if (!origin_anywhere) fail(Errc::origin_outside_domain, "origin is not in the domain");
  if (offenders.empty()) return part;

  Partition out = part;
  const VertexId origin_id = out.vertices.intern(origin);
  int next_id = 0;
  for (const Cell& c : out.cells) next_id = std::max(next_id, c.id + 1);

  std::vector<Cell> rebuilt;
  for (int ci = 0; ci < static_cast<int>(out.cells.size()); ++ci) {
    const Cell& c = out.cells[ci];
    if (std::find(offenders.begin(), offenders.end(), ci) == offenders.end()) {
      rebuilt.push_back(c);
      continue;
    }
    std::vector<Point> pts = out.cell_points(c);
    std::vector<long> ranks;
    for (VertexId v : c.vertices) ranks.push_back(v);
    ranks.push_back(origin_id);
    auto simplices = geom::triangulate_cell_with_new_vertices(pts, {origin}, ranks);
    std::vector<VertexId> lookup = c.vertices;
    lookup.push_back(origin_id);
    for (const geom::Simplex& s : simplices) {
      Cell sub;
      sub.id = next_id++;
      sub.law = c.law;
      for (int idx : s.v) sub.vertices.push_back(lookup[idx]);
      sub.contains_origin = false;
      for (VertexId v : sub.vertices) sub.contains_origin |= (v == origin_id);
      rebuilt.push_back(sub);
    }
  }
  std::sort(rebuilt.begin(), rebuilt.end(), [](const Cell& a, const Cell& b) { return a.id < b.id; });
  out.cells = std::move(rebuilt);
  return out;
}

int cell_index_containing(const Partition& part, const Point& x, double tol) {
  for (int ci = 0; ci < static_cast<int>(part.cells.size()); ++ci) {
    const Cell& c = part.cells[ci];
    bool in_box = true;
    const auto pts = part.cell_points(c);
    Point lo = pts[0], hi = pts[0];
    for (const Point& p : pts) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    for (int d = 0; d < x.size(); ++d)
      if (x[d] < lo[d] - tol || x[d] > hi[d] + tol) in_box = false;
    if (!in_box) continue;
    if (geom::contains_point(pts, x, tol)) return ci;
  }
  return -1;
}

Trajectory simulate_trajectory(const Partition& part, const Point& x0, double dt, int steps) {
  if (!(dt > 0)) fail(Errc::nonpositive_sampling_time, "dt must be positive");
  // cached boxes: trajectories query containment every step
  std::vector<Aabb> boxes;
  boxes.reserve(part.cells.size());
  for (const Cell& c : part.cells) boxes.push_back(cell_aabb(part, c));

  auto locate = [&](const Point& x, int hint) -> int {
    if (hint >= 0 && boxes[hint].contains(x, geom::kBoundaryTol)) {
      // the hint only short-circuits when no lower-id cell could contain x
      bool lower_candidate = false;
      for (int ci = 0; ci < hint; ++ci)
        lower_candidate |= boxes[ci].contains(x, geom::kBoundaryTol);
      if (!lower_candidate && geom::contains_point(part.cell_points(part.cells[hint]), x))
        return hint;
    }
    for (int ci = 0; ci < static_cast<int>(part.cells.size()); ++ci) {
      if (!boxes[ci].contains(x, geom::kBoundaryTol)) continue;
      if (geom::contains_point(part.cell_points(part.cells[ci]), x)) return ci;
    }
    return -1;
  };

  Trajectory tr;
  Point x = x0;
  int cur = locate(x, -1);
  if (cur < 0) fail(Errc::start_outside_domain, "x0 outside the partition domain");
  tr.points.push_back(x);
  for (int k = 0; k < steps; ++k) {
    x = x + dt * eval_dynamics(part.cells[cur], x);
    const int nxt = locate(x, cur);
    if (nxt < 0) {
      tr.truncated = true;
      return tr;
    }
    cur = nxt;
    tr.points.push_back(x);
  }
  return tr;
}

}  // namespace pwalyap::model
