#ifndef PWALYAP_LP_HPP
#define PWALYAP_LP_HPP

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "pwalyap/errors.hpp"

namespace pwalyap::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kFeasTol = 1e-9;

enum class Relation { LessEq, Equal, GreaterEq };

struct Term {
  int var;
  double coef;
};

using LinearForm = std::vector<Term>;

struct Constraint {
  LinearForm lhs;
  Relation rel = Relation::LessEq;
  double rhs = 0.0;
};

/// Solver-agnostic exchange form: minimize `objective` subject to
/// `constraints`; variables are free unless `lower_bounds` (when non-empty,
/// sized num_vars with -inf meaning unbounded below) says otherwise.
struct LinearProgram {
  int num_vars = 0;
  LinearForm objective;
  std::vector<Constraint> constraints;
  std::vector<double> lower_bounds;

  void add_constraint(LinearForm lhs, Relation rel, double rhs) {
    constraints.push_back({std::move(lhs), rel, rhs});
  }
  /// Throws Errc::malformed_program on out-of-range variables or non-finite
  /// coefficients.
  void check_well_formed() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, TimedOut };

const char* to_string(SolveStatus s);

struct LpSolution {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> values;  // sized num_vars when status == Optimal
  double objective = 0.0;
  int iterations = 0;
  double solve_seconds = 0.0;
};

struct SolverOptions {
  double feas_tol = kFeasTol;
  double time_budget = kInf;  // seconds of wall clock
  enum class Form { Auto, Primal, Dual } form = Form::Auto;
  bool presolve = true;
  long max_pivots = -1;  // -1: scale with problem size
};

/// Dense revised simplex (bounded variables, two phases, Bland's rule
/// fallback under stalling). Small standard presolve plus automatic
/// dualization when rows greatly outnumber columns; solutions are always
/// verified against the original program before Optimal is reported.
LpSolution solve(const LinearProgram& lp, const SolverOptions& opts = {});
LpSolution solve(const LinearProgram& lp, double time_budget_seconds);

/// Largest constraint violation of `values` measured against `lp`
/// (bounds included); used for independent rechecks in tests.
double max_violation(const LinearProgram& lp, const std::vector<double>& values);

double eval_objective(const LinearProgram& lp, const std::vector<double>& values);

/// CPLEX LP text format, for cross-checking with external solvers.
void write_lp_format(const LinearProgram& lp, std::ostream& os,
                     const std::vector<std::string>& var_names = {});

}  // namespace pwalyap::lp

#endif
