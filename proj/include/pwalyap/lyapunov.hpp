#ifndef PWALYAP_LYAPUNOV_HPP
#define PWALYAP_LYAPUNOV_HPP

#include <set>

#include "pwalyap/lp.hpp"
#include "pwalyap/model.hpp"

namespace pwalyap::lyap {

struct SearchConfig {
  double eps1 = 1e-4;            // strict-decrease margin
  double eps2 = 1e-4;            // positivity margin
  double zero_tolerance = 1e-8;  // slack treated as zero below this
  double timeout_seconds = 3600.0;

  void check() const {
    if (!(eps1 > 0) || !(eps2 > 0) || !(zero_tolerance > 0) || !(timeout_seconds > 0))
      fail(Errc::malformed_program, "SearchConfig fields must be positive");
  }
};

/// Where each cell's unknowns live inside the LP variable vector.
struct LpIndexMap {
  struct CellVars {
    int cell_id = -1;
    int p0 = -1;   // first of n consecutive p components
    int q = -1;    // -1 for cells containing the origin (q pinned to 0)
    int tau = -1;
  };
  std::vector<CellVars> cells;  // parallel to Partition::cells
  int num_vars = 0;
};

/// The slack-relaxed search program over a validated partition:
///   min sum tau_i  s.t.  per vertex v_k != 0 of each cell:
///     decrease   p_i.(A_i v_k + a_i) - tau_i <= -eps1   (A_i v_k only on I_0)
///     positivity p_i.v_k + q_i >= eps2                  (no q on I_0)
///   continuity V_i(v_k) = V_j(v_k) chained over the cells sharing v_k,
///   and tau_i >= 0.
lp::LinearProgram build_lp(const model::Partition& partition, const SearchConfig& config,
                           LpIndexMap* map = nullptr);

/// Per-cell (p, q, tau) from an Optimal solution; q is 0 on I_0 cells. The
/// candidate is flagged valid iff every slack is at or below zero_tolerance.
model::LyapunovCandidate extract_candidate(const lp::LpSolution& solution,
                                           const LpIndexMap& map,
                                           const model::Partition& partition,
                                           const SearchConfig& config);

/// I_s = { i : tau_i > zero_tolerance }.
std::set<int> slack_cells(const model::LyapunovCandidate& candidate, double zero_tolerance);

}  // namespace pwalyap::lyap

#endif
