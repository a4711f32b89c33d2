#ifndef PWALYAP_REFINE_HPP
#define PWALYAP_REFINE_HPP

#include <map>
#include <set>
#include <vector>

#include "pwalyap/model.hpp"

namespace pwalyap::refine {

using geom::Point;

enum class Strategy { Naive, LyapunovBased, VectorField };

const char* to_string(Strategy s);
Strategy strategy_from_name(const std::string& name);  // naive | lyapunov | vector-field

struct RefinementPlan {
  std::vector<Point> buffer;                       // B: proposed new vertices
  std::set<int> split_set;                         // I_split: cells meeting B
  std::map<int, std::vector<Point>> per_cell_new;  // V_new(i)

  bool empty() const { return buffer.empty(); }
};

/// alpha vj + beta vk with alpha + beta = 1, both in [0,1]; snaps to an
/// existing stored vertex when the result lands within dedup tolerance.
Point new_vertex(const geom::VertexStore& store, const Point& vj, const Point& vk,
                 double alpha, double beta);

/// One midpoint on the longest eligible edge of the single worst-slack cell.
RefinementPlan propose_naive(const model::Partition& partition,
                             const model::LyapunovCandidate& candidate,
                             double zero_tolerance = 1e-8);

/// Per slack cell: zero crossings of Vdot along edges when the sign changes
/// inside the cell, otherwise the midpoint of the max-variation edge.
RefinementPlan propose_lyapunov_based(const model::Partition& partition,
                                      const model::LyapunovCandidate& candidate,
                                      double zero_tolerance = 1e-8);

/// Per slack cell: a field-magnitude-weighted point on the edge whose vertex
/// fields have the smallest cosine.
RefinementPlan propose_vector_field(const model::Partition& partition,
                                    const model::LyapunovCandidate& candidate,
                                    double zero_tolerance = 1e-8);

RefinementPlan propose(Strategy strategy, const model::Partition& partition,
                       const model::LyapunovCandidate& candidate,
                       double zero_tolerance = 1e-8);

/// Fills I_split and V_new for a buffer of boundary points.
RefinementPlan assemble_plan(const model::Partition& partition,
                             const std::vector<Point>& buffer);

/// Replaces every cell in I_split by its Delaunay sub-simplices (laws
/// inherited, untouched cells keep their ids).
model::Partition apply_plan(const model::Partition& partition, const RefinementPlan& plan);

}  // namespace pwalyap::refine

#endif
