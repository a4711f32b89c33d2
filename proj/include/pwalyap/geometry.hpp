#ifndef PWALYAP_GEOMETRY_HPP
#define PWALYAP_GEOMETRY_HPP

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "pwalyap/errors.hpp"

namespace pwalyap::geom {

using Point = Eigen::VectorXd;

/// Single global tolerance for vertex identity; shared vertices must collapse
/// to one id or the continuity equalities would miss them.
inline constexpr double kDedupTol = 1e-8;
/// Degeneracy cutoff on determinant-scale quantities (volumes, affine rank).
inline constexpr double kDegenTol = 1e-10;
inline constexpr double kBoundaryTol = 1e-8;

using VertexId = int;

/// Deduplicating global vertex store. Ids are dense and stable; two points
/// within kDedupTol of each other always map to the same id.
class VertexStore {
 public:
  VertexStore() = default;
  explicit VertexStore(int dimension) : dim_(dimension) {}

  VertexId intern(const Point& p);
  std::optional<VertexId> find(const Point& p) const;
  const Point& point(VertexId id) const { return pts_[id]; }
  int size() const { return static_cast<int>(pts_.size()); }
  int dimension() const { return dim_; }

 private:
  int dim_ = 0;
  std::vector<Point> pts_;
};

struct Edge {
  VertexId a = -1;
  VertexId b = -1;
  Edge() = default;
  Edge(VertexId x, VertexId y) : a(std::min(x, y)), b(std::max(x, y)) {}
  bool operator==(const Edge& o) const { return a == o.a && b == o.b; }
  bool operator<(const Edge& o) const { return a != o.a ? a < o.a : b < o.b; }
};

/// Simplex as sorted indices into the point list it was built from.
struct Simplex {
  std::vector<int> v;
};

bool is_origin(const Point& p, double tol = kDedupTol);

/// 1-faces of conv(verts) as index pairs (i < j) in input order. Pairs are
/// decided by the midpoint adjacency LP; for a simplex every pair is an edge.
/// With exclude_origin set, edges with an endpoint at the origin are omitted.
std::vector<std::pair<int, int>> edges_of_cell(const std::vector<Point>& verts,
                                               bool exclude_origin);

/// argmax_{(vj,vk) in F1} |vj - vk|_2 with ties broken by the smallest
/// (VertexId, VertexId) pair; `ids` run parallel to `verts`.
std::pair<int, int> longest_edge(const std::vector<Point>& verts,
                                 const std::vector<VertexId>& ids, bool exclude_origin);

/// Delaunay triangulation in R^n via the paraboloid lift: a subset is a cell
/// iff it is a non-vertical lower-hull facet of the lifted points. Cospherical
/// ties are broken by a symbolic lexicographic pull on the heights, ordered by
/// `tie_rank` (default: input order), which fans degenerate shells from the
/// lowest-rank vertex and keeps shared-facet subdivisions consistent.
std::vector<Simplex> delaunay(const std::vector<Point>& pts,
                              const std::vector<long>& tie_rank = {});

/// delaunay(cell + new vertices); throws VertexOutsideCell when a new vertex
/// is beyond the closed cell. Indices of the result address cell vertices
/// first, then the new ones.
std::vector<Simplex> triangulate_cell_with_new_vertices(const std::vector<Point>& cell,
                                                        const std::vector<Point>& extra,
                                                        const std::vector<long>& tie_rank = {});

/// x in conv(verts), closed, within tol (convex-combination feasibility LP;
/// direct barycentric solve when the cell is a simplex).
bool contains_point(const std::vector<Point>& verts, const Point& x,
                    double tol = kBoundaryTol);

/// max_{|h|_inf<=1} h.x - max_i h.v_i: ~zero inside or on conv(verts),
/// positive (a gauge distance) outside.
double support_gap(const std::vector<Point>& verts, const Point& x);

/// True iff x lies in conv(verts) and a hyperplane supports the cell at x.
bool on_boundary(const std::vector<Point>& verts, const Point& x,
                 double tol = kBoundaryTol);

/// Proper-separation test; true when int(conv a) and int(conv b) meet.
bool interiors_overlap(const std::vector<Point>& a, const std::vector<Point>& b,
                       double tol = 1e-9);

double simplex_volume(const std::vector<Point>& pts, const Simplex& s);

/// Volume of conv(pts) as the sum over a Delaunay triangulation.
double convex_volume(const std::vector<Point>& pts);

/// Affine rank of the point set at the degeneracy tolerance.
int affine_rank(const std::vector<Point>& pts);

}  // namespace pwalyap::geom

#endif
