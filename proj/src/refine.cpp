#include "pwalyap/refine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "pwalyap/lyapunov.hpp"

namespace pwalyap::refine {

using model::Cell;
using model::LyapunovCandidate;
using model::Partition;

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Naive: return "naive";
    case Strategy::LyapunovBased: return "lyapunov";
    case Strategy::VectorField: return "vector-field";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "naive") return Strategy::Naive;
  if (name == "lyapunov" || name == "lyapunov-based") return Strategy::LyapunovBased;
  if (name == "vector-field" || name == "vectorfield") return Strategy::VectorField;
  fail(Errc::parse_error, "unknown strategy '" + name + "'");
}

Point new_vertex(const geom::VertexStore& store, const Point& vj, const Point& vk, double alpha,
                 double beta) {
  if (std::abs(alpha + beta - 1.0) > 1e-9 || alpha < -1e-12 || alpha > 1.0 + 1e-12 ||
      beta < -1e-12 || beta > 1.0 + 1e-12)
    fail(Errc::bad_weights, "weights must be convex: alpha + beta = 1, 0 <= alpha, beta <= 1");
  Point p = alpha * vj + beta * vk;
  if (auto id = store.find(p)) return store.point(*id);
  return p;
}

namespace {

// Slack-cell indices in ascending cell order (candidate runs parallel to
// cells, so this is also ascending id order).
std::vector<int> slack_indices(const Partition& part, const LyapunovCandidate& cand,
                               double tol) {
  std::vector<int> out;
  for (std::size_t i = 0; i < part.cells.size(); ++i) {
    if (cand.pieces[i].tau > tol) out.push_back(static_cast<int>(i));
  }
  return out;
}

int max_slack_index(const Partition& part, const LyapunovCandidate& cand, double tol) {
  int best = -1;
  for (int i : slack_indices(part, cand, tol)) {
    if (best < 0 || cand.pieces[i].tau > cand.pieces[best].tau) best = i;
  }
  return best;  // ties resolve to the lowest id by scan order
}

struct ScoredEdge {
  std::pair<int, int> e;
  double score;
  geom::Edge key;
};

// Eligible edges sorted by descending score (lexicographic id tie-break).
std::vector<ScoredEdge> ranked_edges(const Cell& cell, const std::vector<Point>& pts,
                                     const std::vector<std::pair<int, int>>& edges,
                                     const std::function<double(int, int)>& score) {
  std::vector<ScoredEdge> out;
  for (const auto& e : edges) {
    ScoredEdge se;
    se.e = e;
    se.score = score(e.first, e.second);
    se.key = geom::Edge(cell.vertices[e.first], cell.vertices[e.second]);
    out.push_back(se);
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredEdge& a, const ScoredEdge& b) {
    if (std::abs(a.score - b.score) > 1e-9 * (1.0 + std::abs(b.score)))
      return a.score > b.score;
    return a.key < b.key;
  });
  return out;
}

// Appends p to the buffer unless it duplicates a stored vertex or an earlier
// proposal (dropped proposals are the documented collision rule).
bool push_proposal(const geom::VertexStore& store, std::vector<Point>& buffer, const Point& p) {
  if (store.find(p)) return false;
  for (const Point& q : buffer) {
    if ((q - p).norm() <= geom::kDedupTol) return true;  // already proposed
  }
  buffer.push_back(p);
  return true;
}

// Longest-edge midpoint for one cell; false when every candidate collides.
bool naive_point_for_cell(const Partition& part, const Cell& cell, std::vector<Point>& buffer) {
  const auto pts = part.cell_points(cell);
  auto edges = geom::edges_of_cell(pts, /*exclude_origin=*/true);
  if (edges.empty()) return false;
  auto ranked = ranked_edges(cell, pts, edges, [&](int i, int j) {
    return (pts[i] - pts[j]).norm();
  });
  for (const auto& se : ranked) {
    const Point mid = 0.5 * (pts[se.e.first] + pts[se.e.second]);
    if (push_proposal(part.vertices, buffer, mid)) return true;
  }
  return false;
}

}  // namespace

RefinementPlan propose_naive(const Partition& part, const LyapunovCandidate& cand, double tol) {
  const int worst = max_slack_index(part, cand, tol);
  if (worst < 0) fail(Errc::no_slack_cells, "no cell has slack above the tolerance");
  RefinementPlan plan;
  if (!naive_point_for_cell(part, part.cells[worst], plan.buffer))
    fail(Errc::no_eligible_edge,
         "cell " + std::to_string(part.cells[worst].id) + " has no refinable edge");
  return plan;
}

RefinementPlan propose_lyapunov_based(const Partition& part, const LyapunovCandidate& cand,
                                      double tol) {
  const auto slack = slack_indices(part, cand, tol);
  if (slack.empty()) fail(Errc::no_slack_cells, "no cell has slack above the tolerance");

  RefinementPlan plan;
  for (int ci : slack) {
    const Cell& cell = part.cells[ci];
    const auto pts = part.cell_points(cell);
    std::vector<double> vdot(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) vdot[k] = model::eval_vdot(cand, cell, pts[k]);
    bool any_pos = false, any_neg = false;
    for (double d : vdot) {
      any_pos |= d > 0;
      any_neg |= d < 0;
    }
    const int sgn = (any_pos && any_neg) ? 0 : (any_pos ? 1 : -1);

    auto edges = geom::edges_of_cell(pts, /*exclude_origin=*/true);
    if (edges.empty()) continue;

    bool added = false;
    if (sgn == 0) {
      // crossing edges, each refined at the exact zero of Vdot
      std::vector<ScoredEdge> crossings = ranked_edges(cell, pts, edges, [&](int i, int j) {
        return vdot[i] * vdot[j] < 0 ? 1.0 : 0.0;
      });
      for (const auto& se : crossings) {
        const int i = se.e.first, j = se.e.second;
        if (!(vdot[i] * vdot[j] < 0)) continue;
        const double denom = vdot[j] - vdot[i];
        if (denom == 0.0)
          fail(Errc::degenerate_crossing, "equal derivatives on a crossing edge");
        const double alpha = vdot[j] / denom;
        const Point p = new_vertex(part.vertices, pts[i], pts[j], alpha, 1.0 - alpha);
        if (part.vertices.find(p)) continue;  // crossing collapses onto a vertex
        if (push_proposal(part.vertices, plan.buffer, p)) added = true;
      }
    }
    if (!added) {
      // sign-definite cells (and crossing-free corner cases): midpoint of the
      // edge with the largest derivative variation
      auto ranked = ranked_edges(cell, pts, edges, [&](int i, int j) {
        return std::abs(vdot[i] - vdot[j]);
      });
      for (const auto& se : ranked) {
        const Point mid = 0.5 * (pts[se.e.first] + pts[se.e.second]);
        if (push_proposal(part.vertices, plan.buffer, mid)) {
          added = true;
          break;
        }
      }
    }
  }
  if (plan.buffer.empty()) return propose_naive(part, cand, tol);
  return plan;
}

RefinementPlan propose_vector_field(const Partition& part, const LyapunovCandidate& cand,
                                    double tol) {
  const auto slack = slack_indices(part, cand, tol);
  if (slack.empty()) fail(Errc::no_slack_cells, "no cell has slack above the tolerance");

  RefinementPlan plan;
  for (int ci : slack) {
    const Cell& cell = part.cells[ci];
    const auto pts = part.cell_points(cell);
    std::vector<Point> field(pts.size());
    std::vector<double> mag(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
      field[k] = model::eval_dynamics(cell, pts[k]);
      mag[k] = field[k].norm();
    }
    auto edges = geom::edges_of_cell(pts, /*exclude_origin=*/true);
    std::vector<std::pair<int, int>> usable;
    for (const auto& e : edges) {
      if (mag[e.first] > 1e-12 && mag[e.second] > 1e-12) usable.push_back(e);
    }

    bool added = false;
    if (!usable.empty()) {
      auto ranked = ranked_edges(cell, pts, usable, [&](int i, int j) {
        // argmin of the cosine == argmax of its negation
        return -field[i].dot(field[j]) / (mag[i] * mag[j]);
      });
      for (const auto& se : ranked) {
        const int i = se.e.first, j = se.e.second;
        const double alpha = 1.0 / (1.0 + mag[i] / mag[j]);
        const Point p = new_vertex(part.vertices, pts[i], pts[j], alpha, 1.0 - alpha);
        if (part.vertices.find(p)) continue;
        if (push_proposal(part.vertices, plan.buffer, p)) {
          added = true;
          break;
        }
      }
    }
    if (!added) {
      // vanishing field on every edge endpoint: fall back to the midpoint rule
      naive_point_for_cell(part, cell, plan.buffer);
    }
  }
  if (plan.buffer.empty()) return propose_naive(part, cand, tol);
  return plan;
}

RefinementPlan propose(Strategy strategy, const Partition& part, const LyapunovCandidate& cand,
                       double tol) {
  RefinementPlan plan;
  switch (strategy) {
    case Strategy::Naive: plan = propose_naive(part, cand, tol); break;
    case Strategy::LyapunovBased: plan = propose_lyapunov_based(part, cand, tol); break;
    case Strategy::VectorField: plan = propose_vector_field(part, cand, tol); break;
  }
  return assemble_plan(part, plan.buffer);
}

RefinementPlan assemble_plan(const Partition& part, const std::vector<Point>& buffer) {
  RefinementPlan plan;
  for (const Point& p : buffer) {
    bool dup = false;
    for (const Point& q : plan.buffer) dup |= (q - p).norm() <= geom::kDedupTol;
    if (!dup) plan.buffer.push_back(p);
  }
  std::vector<std::pair<Point, Point>> boxes;  // per-cell AABB
  boxes.reserve(part.cells.size());
  for (const Cell& c : part.cells) {
    Point lo = part.vertices.point(c.vertices[0]);
    Point hi = lo;
    for (auto v : c.vertices) {
      lo = lo.cwiseMin(part.vertices.point(v));
      hi = hi.cwiseMax(part.vertices.point(v));
    }
    boxes.push_back({lo, hi});
  }
  auto in_box = [&](int ci, const Point& p) {
    for (int d = 0; d < p.size(); ++d) {
      if (p[d] < boxes[ci].first[d] - geom::kBoundaryTol ||
          p[d] > boxes[ci].second[d] + geom::kBoundaryTol)
        return false;
    }
    return true;
  };
  for (const Point& p : plan.buffer) {
    bool anywhere = false;
    for (std::size_t ci = 0; ci < part.cells.size(); ++ci) {
      const Cell& c = part.cells[ci];
      if (!in_box(static_cast<int>(ci), p)) continue;
      const auto pts = part.cell_points(c);
      if (!geom::contains_point(pts, p)) continue;
      anywhere = true;
      if (!geom::on_boundary(pts, p))
        fail(Errc::point_off_boundary, "buffered point lies strictly inside cell " +
                                           std::to_string(c.id));
      plan.split_set.insert(c.id);
      plan.per_cell_new[c.id].push_back(p);
    }
    if (!anywhere)
      fail(Errc::point_off_boundary, "buffered point lies outside the partition domain");
  }
  return plan;
}

Partition apply_plan(const Partition& part, const RefinementPlan& plan) {
  if (plan.empty()) return part;
  Partition out;
  out.dimension = part.dimension;
  out.vertices = part.vertices;
  std::vector<geom::VertexId> buffer_ids;
  for (const Point& p : plan.buffer) buffer_ids.push_back(out.vertices.intern(p));

  int next_id = 0;
  for (const Cell& c : part.cells) next_id = std::max(next_id, c.id + 1);

  for (const Cell& c : part.cells) {
    if (!plan.split_set.count(c.id)) {
      out.cells.push_back(c);
      continue;
    }
    const auto pts = part.cell_points(c);
    std::vector<Point> fresh;
    std::vector<geom::VertexId> fresh_ids;
    auto it = plan.per_cell_new.find(c.id);
    if (it != plan.per_cell_new.end()) {
      for (const Point& p : it->second) {
        const auto id = out.vertices.find(p);
        if (!id) fail(Errc::point_off_boundary, "plan point missing from the store");
        if (std::find(c.vertices.begin(), c.vertices.end(), *id) != c.vertices.end())
          continue;  // already a vertex of this cell
        fresh.push_back(out.vertices.point(*id));
        fresh_ids.push_back(*id);
      }
    }
    if (fresh.empty()) {
      out.cells.push_back(c);
      continue;
    }
    std::vector<long> ranks;
    for (auto v : c.vertices) ranks.push_back(v);
    for (auto v : fresh_ids) ranks.push_back(v);
    auto simplices = geom::triangulate_cell_with_new_vertices(pts, fresh, ranks);
    std::vector<geom::VertexId> lookup = c.vertices;
    lookup.insert(lookup.end(), fresh_ids.begin(), fresh_ids.end());
    for (const geom::Simplex& s : simplices) {
      Cell sub;
      sub.id = next_id++;
      sub.law = c.law;
      for (int idx : s.v) sub.vertices.push_back(lookup[idx]);
      sub.contains_origin = false;
      for (auto v : sub.vertices) sub.contains_origin |= geom::is_origin(out.vertices.point(v));
      out.cells.push_back(sub);
    }
  }
  std::sort(out.cells.begin(), out.cells.end(),
            [](const Cell& a, const Cell& b) { return a.id < b.id; });
  return out;
}

}  // namespace pwalyap::refine
