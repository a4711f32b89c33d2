#ifndef PWALYAP_MODEL_HPP
#define PWALYAP_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pwalyap/geometry.hpp"

namespace pwalyap::model {

using geom::Point;
using geom::VertexId;

struct AffineLaw {
  Eigen::MatrixXd A;
  Eigen::VectorXd a;
};

/// Polytopic cell in vertex representation with its affine law. A cell is in
/// I_0 iff the origin is one of its vertices (contains_origin).
struct Cell {
  int id = -1;
  std::vector<VertexId> vertices;
  AffineLaw law;
  bool contains_origin = false;
};

struct Partition {
  int dimension = 0;
  geom::VertexStore vertices;
  std::vector<Cell> cells;  // sorted by id

  std::vector<Point> cell_points(const Cell& c) const {
    std::vector<Point> pts;
    pts.reserve(c.vertices.size());
    for (VertexId v : c.vertices) pts.push_back(vertices.point(v));
    return pts;
  }
  const Cell* cell_by_id(int id) const {
    for (const Cell& c : cells)
      if (c.id == id) return &c;
    return nullptr;
  }
};

/// Per-cell affine pieces of V with the slack from the last LP solve.
/// Pieces run parallel to Partition::cells.
struct LyapunovCandidate {
  struct Piece {
    int cell_id = -1;
    Eigen::VectorXd p;
    double q = 0.0;
    double tau = 0.0;
  };
  std::vector<Piece> pieces;
  bool valid = false;  // all slacks at or below the zero tolerance

  const Piece& piece_for(int cell_id) const;
};

enum class Severity { Warning, Error };

struct Violation {
  enum class Kind {
    cell_structure,
    origin_flag,
    origin_law_offset,
    interior_overlap,
    shared_vertex_closure,
    dynamics_continuity,
    origin_not_vertex,
  };
  Kind kind;
  Severity severity;
  std::string message;
  std::vector<int> cells;
  double residual = 0.0;
};

const char* to_string(Violation::Kind k);
bool has_errors(const std::vector<Violation>& vs);

/// A_i v + a_i.
Point eval_dynamics(const Cell& cell, const Point& v);

/// <p_i, A_i v + a_i> for the piece attached to the cell.
double eval_vdot(const LyapunovCandidate& cand, const Cell& cell, const Point& v);

/// Empty iff all Partition invariants hold. Dynamics-continuity mismatches
/// and origin-not-a-vertex conditions are reported as warnings; structural
/// defects (overlaps, closure breaks, degenerate cells) are errors.
std::vector<Violation> validate_partition(const Partition& partition);

/// Inverse of the forward-Euler map: A_c = (A_d - I)/t_s, a_c = a_d/t_s.
AffineLaw discrete_to_continuous(const AffineLaw& law, double t_s);

/// Re-triangulates every cell that contains the origin without having it as
/// a vertex; other cells keep their ids.
Partition ensure_origin_vertex(const Partition& partition);

struct Trajectory {
  std::vector<Point> points;
  bool truncated = false;  // left the domain before the step budget
};

/// Forward Euler under the law of the lowest-id cell containing the state.
Trajectory simulate_trajectory(const Partition& partition, const Point& x0, double dt,
                               int steps);

/// Index into partition.cells of the lowest-id cell containing x, or -1.
int cell_index_containing(const Partition& partition, const Point& x,
                          double tol = geom::kBoundaryTol);

}  // namespace pwalyap::model

#endif
