#include "pwalyap/lyapunov.hpp"

#include <algorithm>
#include <cmath>

namespace pwalyap::lyap {

using model::Cell;
using model::Partition;

lp::LinearProgram build_lp(const Partition& part, const SearchConfig& config, LpIndexMap* map) {
  config.check();
  const int n = part.dimension;
  if (part.cells.empty() || n <= 0)
    fail(Errc::invalid_partition, "partition has no cells");
  for (const Cell& c : part.cells) {
    if (static_cast<int>(c.vertices.size()) < n + 1 || c.law.A.rows() != n ||
        c.law.A.cols() != n || c.law.a.size() != n)
      fail(Errc::invalid_partition, "malformed cell " + std::to_string(c.id));
    bool origin_vertex = false;
    for (auto v : c.vertices) origin_vertex |= geom::is_origin(part.vertices.point(v));
    if (origin_vertex != c.contains_origin)
      fail(Errc::invalid_partition, "origin flag mismatch on cell " + std::to_string(c.id));
  }

  LpIndexMap local;
  LpIndexMap& idx = map ? *map : local;
  idx.cells.clear();

  lp::LinearProgram prog;
  int nv = 0;
  for (const Cell& c : part.cells) {
    LpIndexMap::CellVars cv;
    cv.cell_id = c.id;
    cv.p0 = nv;
    nv += n;
    if (!c.contains_origin) cv.q = nv++;
    cv.tau = nv++;
    idx.cells.push_back(cv);
  }
  idx.num_vars = nv;
  prog.num_vars = nv;
  for (const auto& cv : idx.cells) prog.objective.push_back({cv.tau, 1.0});

  // Decrease and positivity rows, vertex by vertex; the origin is skipped
  // (V(0) = 0 and Vdot(0) = 0 hold identically there).
  for (std::size_t ci = 0; ci < part.cells.size(); ++ci) {
    const Cell& c = part.cells[ci];
    const auto& cv = idx.cells[ci];
    for (auto vid : c.vertices) {
      const auto& v = part.vertices.point(vid);
      if (geom::is_origin(v)) continue;
      Eigen::VectorXd w = c.law.A * v;
      if (!c.contains_origin) w += c.law.a;
      lp::LinearForm row;
      for (int d = 0; d < n; ++d) {
        if (w[d] != 0.0) row.push_back({cv.p0 + d, w[d]});
      }
      row.push_back({cv.tau, -1.0});
      prog.add_constraint(std::move(row), lp::Relation::LessEq, -config.eps1);
    }
    for (auto vid : c.vertices) {
      const auto& v = part.vertices.point(vid);
      if (geom::is_origin(v)) continue;
      lp::LinearForm row;
      for (int d = 0; d < n; ++d) {
        if (v[d] != 0.0) row.push_back({cv.p0 + d, v[d]});
      }
      if (cv.q >= 0) row.push_back({cv.q, 1.0});
      prog.add_constraint(std::move(row), lp::Relation::GreaterEq, config.eps2);
    }
  }

  // Continuity: V_i(v) = V_j(v) chained over the cells sharing each vertex.
  std::vector<std::vector<int>> incident(part.vertices.size());
  for (std::size_t ci = 0; ci < part.cells.size(); ++ci) {
    for (auto vid : part.cells[ci].vertices) incident[vid].push_back(static_cast<int>(ci));
  }
  for (int vid = 0; vid < part.vertices.size(); ++vid) {
    const auto& inc = incident[vid];
    if (inc.size() < 2) continue;
    const auto& v = part.vertices.point(vid);
    for (std::size_t k = 0; k + 1 < inc.size(); ++k) {
      const auto& a = idx.cells[inc[k]];
      const auto& b = idx.cells[inc[k + 1]];
      lp::LinearForm row;
      for (int d = 0; d < n; ++d) {
        if (v[d] != 0.0) {
          row.push_back({a.p0 + d, v[d]});
          row.push_back({b.p0 + d, -v[d]});
        }
      }
      if (a.q >= 0) row.push_back({a.q, 1.0});
      if (b.q >= 0) row.push_back({b.q, -1.0});
      if (row.empty()) continue;  // both pieces vanish at the origin by structure
      prog.add_constraint(std::move(row), lp::Relation::Equal, 0.0);
    }
  }

  for (const auto& cv : idx.cells)
    prog.add_constraint({{cv.tau, 1.0}}, lp::Relation::GreaterEq, 0.0);

  return prog;
}

model::LyapunovCandidate extract_candidate(const lp::LpSolution& sol, const LpIndexMap& idx,
                                           const Partition& part, const SearchConfig& config) {
  if (sol.status != lp::SolveStatus::Optimal)
    fail(Errc::not_optimal, std::string("solution status is ") + lp::to_string(sol.status));
  for (double v : sol.values) {
    if (!std::isfinite(v)) fail(Errc::not_optimal, "solution carries non-finite values");
  }
  const int n = part.dimension;
  model::LyapunovCandidate cand;
  cand.valid = true;
  for (const auto& cv : idx.cells) {
    model::LyapunovCandidate::Piece piece;
    piece.cell_id = cv.cell_id;
    piece.p.resize(n);
    for (int d = 0; d < n; ++d) piece.p[d] = sol.values[cv.p0 + d];
    piece.q = cv.q >= 0 ? sol.values[cv.q] : 0.0;
    piece.tau = sol.values[cv.tau];
    if (piece.tau > config.zero_tolerance) cand.valid = false;
    cand.pieces.push_back(std::move(piece));
  }
  return cand;
}

std::set<int> slack_cells(const model::LyapunovCandidate& cand, double zero_tolerance) {
  std::set<int> out;
  for (const auto& piece : cand.pieces) {
    if (piece.tau > zero_tolerance) out.insert(piece.cell_id);
  }
  return out;
}

}  // namespace pwalyap::lyap
