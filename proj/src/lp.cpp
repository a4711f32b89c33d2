#include "pwalyap/lp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>

#include <Eigen/Dense>

#include "pwalyap/kernels.hpp"

namespace pwalyap::lp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Bnd {
  double lo = -kInf;
  double hi = kInf;
};

// Canonical internal form: minimize cost'x + offset subject to sparse rows
// (LessEq / Equal only) and two-sided variable bounds.
struct Problem {
  int nvars = 0;
  std::vector<double> cost;
  double offset = 0.0;
  std::vector<LinearForm> rows;
  std::vector<Relation> rel;
  std::vector<double> rhs;
  std::vector<Bnd> bnd;

  int num_rows() const { return static_cast<int>(rows.size()); }
};

LinearForm merge_terms(const LinearForm& in, int nvars) {
  std::vector<double> acc(nvars, 0.0);
  std::vector<int> touched;
  touched.reserve(in.size());
  for (const Term& t : in) {
    if (acc[t.var] == 0.0 && t.coef != 0.0) touched.push_back(t.var);
    acc[t.var] += t.coef;
  }
  std::sort(touched.begin(), touched.end());
  LinearForm out;
  out.reserve(touched.size());
  for (int v : touched) {
    if (acc[v] != 0.0) out.push_back({v, acc[v]});
  }
  return out;
}

Problem build_problem(const LinearProgram& lp) {
  Problem p;
  p.nvars = lp.num_vars;
  p.cost.assign(lp.num_vars, 0.0);
  for (const Term& t : merge_terms(lp.objective, lp.num_vars)) p.cost[t.var] = t.coef;
  p.bnd.assign(lp.num_vars, Bnd{});
  if (!lp.lower_bounds.empty()) {
    for (int j = 0; j < lp.num_vars; ++j) p.bnd[j].lo = lp.lower_bounds[j];
  }
  p.rows.reserve(lp.constraints.size());
  for (const Constraint& c : lp.constraints) {
    LinearForm lhs = merge_terms(c.lhs, lp.num_vars);
    double rhs = c.rhs;
    Relation rel = c.rel;
    if (rel == Relation::GreaterEq) {
      for (Term& t : lhs) t.coef = -t.coef;
      rhs = -rhs;
      rel = Relation::LessEq;
    }
    p.rows.push_back(std::move(lhs));
    p.rel.push_back(rel);
    p.rhs.push_back(rhs);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Presolve: empty rows, singleton rows -> bounds, fixed and unconstrained
// variables. Keeps a map back to the original variable space.
// ---------------------------------------------------------------------------

struct PresolveResult {
  bool infeasible = false;
  bool unbounded = false;
  Problem reduced;
  std::vector<int> var_map;   // original var -> reduced var, or -1 when removed
  std::vector<double> fixed;  // value when removed by fixing
  struct Elim {               // removed by substitution through an equality
    int var;
    double coef;      // pivot coefficient
    double rhs;
    LinearForm expr;  // remaining terms of the pivot row (original indices)
  };
  std::vector<Elim> elims;  // recover in reverse order
};

// Empty rows, singleton rows -> bounds, fixed and unconstrained columns, and
// substitution of free variables through equality rows (Markowitz-style pivot
// choice with a fill cap). The last pass is what keeps the basis small on
// vertex-sharing programs whose equality count rivals the variable count.
PresolveResult presolve(const Problem& in, double tol) {
  PresolveResult res;
  const int n = in.nvars;
  std::vector<Bnd> bnd = in.bnd;
  std::vector<bool> row_alive(in.rows.size(), true);
  std::vector<bool> var_alive(n, true);
  std::vector<double> fixed_val(n, 0.0);
  std::vector<LinearForm> rows = in.rows;
  std::vector<double> rhs = in.rhs;
  std::vector<double> cost = in.cost;
  double offset = in.offset;

  // live column index: rows containing each variable
  std::vector<std::vector<int>> var_rows(n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const Term& t : rows[i]) var_rows[t.var].push_back(static_cast<int>(i));
  }
  auto detach = [&](int v, int row) {
    auto& vr = var_rows[v];
    vr.erase(std::remove(vr.begin(), vr.end(), row), vr.end());
  };
  auto merge_into = [&](LinearForm& row, int skip_var, double scale, const LinearForm& expr,
                        int row_index) {
    // row += scale * expr, dropping skip_var and keeping the column index fresh
    for (const Term& t : expr) {
      if (t.var == skip_var) continue;
      bool found = false;
      for (Term& u : row) {
        if (u.var == t.var) {
          u.coef += scale * t.coef;
          found = true;
          break;
        }
      }
      if (!found) {
        row.push_back({t.var, scale * t.coef});
        var_rows[t.var].push_back(row_index);
      }
    }
    for (std::size_t k = row.size(); k-- > 0;) {
      if (std::abs(row[k].coef) <= 1e-13) {
        detach(row[k].var, row_index);
        row.erase(row.begin() + static_cast<long>(k));
      }
    }
  };

  bool changed = true;
  for (int pass = 0; pass < 24 && changed; ++pass) {
    changed = false;

    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!row_alive[i]) continue;
      LinearForm& r = rows[i];
      if (r.empty()) {
        const bool ok = (in.rel[i] == Relation::Equal)
                            ? std::abs(rhs[i]) <= tol * (1.0 + std::abs(rhs[i]))
                            : rhs[i] >= -tol;
        if (!ok) {
          res.infeasible = true;
          return res;
        }
        row_alive[i] = false;
        changed = true;
        continue;
      }
      if (r.size() == 1) {
        const int v = r[0].var;
        const double a = r[0].coef;
        const double val = rhs[i] / a;
        if (in.rel[i] == Relation::Equal) {
          bnd[v].lo = std::max(bnd[v].lo, val);
          bnd[v].hi = std::min(bnd[v].hi, val);
        } else if (a > 0) {
          bnd[v].hi = std::min(bnd[v].hi, val);
        } else {
          bnd[v].lo = std::max(bnd[v].lo, val);
        }
        if (bnd[v].lo > bnd[v].hi + tol * (1.0 + std::abs(bnd[v].lo))) {
          res.infeasible = true;
          return res;
        }
        row_alive[i] = false;
        detach(v, static_cast<int>(i));
        changed = true;
      }
    }

    // Fix pinched variables and decide unconstrained columns.
    for (int v = 0; v < n; ++v) {
      if (!var_alive[v]) continue;
      bool fix = false;
      double val = 0.0;
      if (std::isfinite(bnd[v].lo) && std::isfinite(bnd[v].hi) &&
          bnd[v].hi - bnd[v].lo <= 1e-12 * (1.0 + std::abs(bnd[v].lo))) {
        fix = true;
        val = 0.5 * (bnd[v].lo + bnd[v].hi);
      } else if (var_rows[v].empty()) {
        const double c = cost[v];
        if (c > tol) {
          if (!std::isfinite(bnd[v].lo)) {
            res.unbounded = true;
            return res;
          }
          fix = true;
          val = bnd[v].lo;
        } else if (c < -tol) {
          if (!std::isfinite(bnd[v].hi)) {
            res.unbounded = true;
            return res;
          }
          fix = true;
          val = bnd[v].hi;
        } else {
          fix = true;
          if (std::isfinite(bnd[v].lo) && bnd[v].lo > 0)
            val = bnd[v].lo;
          else if (std::isfinite(bnd[v].hi) && bnd[v].hi < 0)
            val = bnd[v].hi;
          else
            val = 0.0;
        }
      }
      if (!fix) continue;
      var_alive[v] = false;
      fixed_val[v] = val;
      offset += cost[v] * val;
      for (int ri : std::vector<int>(var_rows[v])) {
        if (!row_alive[ri]) continue;
        LinearForm& r = rows[ri];
        for (std::size_t k = 0; k < r.size(); ++k) {
          if (r[k].var == v) {
            rhs[ri] -= r[k].coef * val;
            r.erase(r.begin() + static_cast<long>(k));
            break;
          }
        }
      }
      var_rows[v].clear();
      changed = true;
    }

    // Substitute free variables out through equality rows.
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!row_alive[i] || in.rel[i] != Relation::Equal) continue;
      LinearForm& row = rows[i];
      if (row.size() < 2) continue;
      double maxc = 0.0;
      for (const Term& t : row) maxc = std::max(maxc, std::abs(t.coef));
      int pivot = -1;
      std::size_t best_cols = SIZE_MAX;
      for (const Term& t : row) {
        if (std::isfinite(bnd[t.var].lo) || std::isfinite(bnd[t.var].hi)) continue;
        if (std::abs(t.coef) < 0.01 * maxc) continue;
        const std::size_t cols = var_rows[t.var].size();
        if (cols < best_cols || (cols == best_cols && pivot >= 0 && t.var < pivot)) {
          best_cols = cols;
          pivot = t.var;
        }
      }
      if (pivot < 0) continue;
      if ((row.size() - 1) * (best_cols - 1) > 400) continue;  // fill cap

      PresolveResult::Elim elim;
      elim.var = pivot;
      elim.rhs = rhs[i];
      for (const Term& t : row) {
        if (t.var == pivot)
          elim.coef = t.coef;
        else
          elim.expr.push_back(t);
      }

      row_alive[i] = false;
      for (const Term& t : row) detach(t.var, static_cast<int>(i));

      for (int ri : std::vector<int>(var_rows[pivot])) {
        if (!row_alive[ri]) continue;
        LinearForm& target = rows[ri];
        double b = 0.0;
        for (std::size_t k = 0; k < target.size(); ++k) {
          if (target[k].var == pivot) {
            b = target[k].coef;
            target.erase(target.begin() + static_cast<long>(k));
            break;
          }
        }
        if (b == 0.0) continue;
        const double scale = -b / elim.coef;
        rhs[ri] += scale * elim.rhs;  // d - (b/a) c
        merge_into(target, pivot, scale, elim.expr, ri);
      }
      var_rows[pivot].clear();
      if (cost[pivot] != 0.0) {
        const double scale = -cost[pivot] / elim.coef;
        offset += cost[pivot] * elim.rhs / elim.coef;
        for (const Term& t : elim.expr) cost[t.var] += scale * t.coef;
        cost[pivot] = 0.0;
      }
      var_alive[pivot] = false;
      res.elims.push_back(std::move(elim));
      changed = true;
    }
  }

  // Compact.
  res.var_map.assign(n, -1);
  res.fixed = fixed_val;
  int nv = 0;
  for (int v = 0; v < n; ++v) {
    if (var_alive[v]) res.var_map[v] = nv++;
  }
  Problem& out = res.reduced;
  out.nvars = nv;
  out.offset = offset;
  out.cost.assign(nv, 0.0);
  out.bnd.assign(nv, Bnd{});
  for (int v = 0; v < n; ++v) {
    if (res.var_map[v] >= 0) {
      out.cost[res.var_map[v]] = cost[v];
      out.bnd[res.var_map[v]] = bnd[v];
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!row_alive[i]) continue;
    LinearForm r;
    r.reserve(rows[i].size());
    for (const Term& t : rows[i]) r.push_back({res.var_map[t.var], t.coef});
    std::sort(r.begin(), r.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    out.rows.push_back(std::move(r));
    out.rel.push_back(in.rel[i]);
    out.rhs.push_back(rhs[i]);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Dualization: with bounds rewritten as rows the primal has only free
// variables, and its dual has one (equality) row per primal variable. Used
// when rows greatly outnumber columns so the simplex basis stays small.
// ---------------------------------------------------------------------------

struct DualModel {
  Problem dual;
  int num_primal_rows = 0;  // structural rows of the primal (prefix of dual vars)
};

DualModel dualize(const Problem& p) {
  DualModel dm;
  const int m = p.num_rows();
  dm.num_primal_rows = m;

  // Row list of the all-free primal: structural rows then bound rows.
  // Row k of the dual corresponds to primal variable k.
  Problem& d = dm.dual;
  d.rows.assign(p.nvars, LinearForm{});
  d.rel.assign(p.nvars, Relation::Equal);
  d.rhs = p.cost;

  std::vector<double> g;  // dual cost = -rhs of the primal row list
  std::vector<Bnd> ybnd;
  for (int i = 0; i < m; ++i) {
    for (const Term& t : p.rows[i]) d.rows[t.var].push_back({i, t.coef});
    g.push_back(-p.rhs[i]);
    if (p.rel[i] == Relation::Equal) {
      ybnd.push_back(Bnd{-kInf, kInf});
    } else {
      ybnd.push_back(Bnd{-kInf, 0.0});
    }
  }
  int yi = m;
  for (int j = 0; j < p.nvars; ++j) {
    if (std::isfinite(p.bnd[j].lo)) {  // -x_j <= -lo
      d.rows[j].push_back({yi++, -1.0});
      g.push_back(p.bnd[j].lo);
      ybnd.push_back(Bnd{-kInf, 0.0});
    }
    if (std::isfinite(p.bnd[j].hi)) {  // x_j <= hi
      d.rows[j].push_back({yi++, 1.0});
      g.push_back(-p.bnd[j].hi);
      ybnd.push_back(Bnd{-kInf, 0.0});
    }
  }
  d.nvars = yi;
  d.cost = std::move(g);
  d.bnd = std::move(ybnd);
  d.offset = 0.0;
  return dm;
}

// ---------------------------------------------------------------------------
// Core: bounded-variable two-phase revised simplex with a dense explicit
// basis inverse. Dantzig pricing, Bland's rule fallback under stalling.
// ---------------------------------------------------------------------------

enum class VStat : std::uint8_t { Basic, AtLo, AtHi, FreeNB };

struct CoreResult {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> x;         // structural variable values
  double obj = 0.0;              // without offset
  std::vector<double> row_mult;  // simplex multipliers of the final basis
  long pivots = 0;
};

class Core {
 public:
  Core(const Problem& p, const SolverOptions& opts, Clock::time_point t0)
      : p_(p), opts_(opts), t0_(t0), m_(p.num_rows()) {}

  CoreResult run() {
    setup();
    CoreResult res;
    // Phase 1: minimize artificial infeasibility.
    if (have_artificials_) {
      const LoopExit e = iterate(/*phase1=*/true);
      if (e == LoopExit::TimedOut) return timed_out();
      recompute_basics();
      double infeas = 0.0;
      for (int j = art0_; j < ntot_; ++j) infeas += xval_[j];
      if (infeas > 1e-7 + 10.0 * opts_.feas_tol * rhs_scale_) {
        res.status = SolveStatus::Infeasible;
        res.pivots = pivots_;
        return res;
      }
      retire_artificials();
    }
    // Phase 2.
    phase1_ = false;
    const LoopExit e = iterate(/*phase1=*/false);
    if (e == LoopExit::TimedOut) return timed_out();
    if (e == LoopExit::Unbounded) {
      res.status = SolveStatus::Unbounded;
      res.pivots = pivots_;
      return res;
    }
    recompute_basics();
    res.status = SolveStatus::Optimal;
    res.x.assign(p_.nvars, 0.0);
    for (int j = 0; j < p_.nvars; ++j) res.x[j] = xval_[j];
    res.obj = 0.0;
    for (int j = 0; j < ntot_; ++j) res.obj += cost_[j] * xval_[j];
    res.row_mult = multipliers();
    res.pivots = pivots_;
    return res;
  }

 private:
  enum class LoopExit { Optimal, Unbounded, TimedOut };

  const Problem& p_;
  const SolverOptions& opts_;
  Clock::time_point t0_;
  int m_ = 0;
  int nstruct_ = 0;
  int art0_ = 0;
  int ntot_ = 0;
  bool have_artificials_ = false;
  bool phase1_ = true;
  bool bland_ = false;
  bool confirmed_ = false;
  bool fresh_ = false;
  int stall_ = 0;
  long pivots_ = 0;
  long max_pivots_ = 0;
  double rhs_scale_ = 1.0;

  std::vector<std::vector<Term>> cols_;  // column k: list of (row, coef)
  std::vector<double> cost_;             // phase-2 costs (artificials 0)
  std::vector<Bnd> bnd_;
  std::vector<VStat> stat_;
  std::vector<double> xval_;
  std::vector<int> basis_;      // row -> basic var
  std::vector<double> binv_;    // row-major m x m
  std::vector<double> work_;    // ftran result
  std::vector<double> pi_;      // btran result
  std::vector<double> cb_;
  std::vector<double> devex_;   // reference-framework pricing weights

  static constexpr double kPivTol = 1e-9;
  static constexpr double kDualTol = 1e-9;
  static constexpr int kRefactorEvery = 768;

  void setup() {
    nstruct_ = p_.nvars;
    cols_.assign(nstruct_, {});
    for (int i = 0; i < m_; ++i) {
      for (const Term& t : p_.rows[i]) cols_[t.var].push_back({i, t.coef});
    }
    bnd_ = p_.bnd;
    cost_ = p_.cost;
    rhs_scale_ = 1.0;
    for (double b : p_.rhs) rhs_scale_ = std::max(rhs_scale_, std::abs(b));

    // Slacks for inequality rows.
    std::vector<int> slack_of(m_, -1);
    for (int i = 0; i < m_; ++i) {
      if (p_.rel[i] == Relation::LessEq) {
        slack_of[i] = static_cast<int>(cols_.size());
        cols_.push_back({{i, 1.0}});
        bnd_.push_back(Bnd{0.0, kInf});
        cost_.push_back(0.0);
      }
    }
    const int nslack_end = static_cast<int>(cols_.size());

    // Nonbasic start: every variable at its bound nearest zero (or zero when
    // free), then residuals decide slack/artificial basics.
    xval_.assign(nslack_end, 0.0);
    stat_.assign(nslack_end, VStat::AtLo);
    for (int j = 0; j < nslack_end; ++j) {
      if (std::isfinite(bnd_[j].lo)) {
        xval_[j] = bnd_[j].lo;
        stat_[j] = VStat::AtLo;
      } else if (std::isfinite(bnd_[j].hi)) {
        xval_[j] = bnd_[j].hi;
        stat_[j] = VStat::AtHi;
      } else {
        xval_[j] = 0.0;
        stat_[j] = VStat::FreeNB;
      }
    }
    std::vector<double> resid = p_.rhs;
    for (int j = 0; j < nstruct_; ++j) {
      if (xval_[j] == 0.0) continue;
      for (const Term& t : cols_[j]) resid[t.var] -= t.coef * xval_[j];
    }

    basis_.assign(m_, -1);
    binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
    art0_ = nslack_end;
    for (int i = 0; i < m_; ++i) {
      if (slack_of[i] >= 0 && resid[i] >= 0.0) {
        basis_[i] = slack_of[i];
        stat_[slack_of[i]] = VStat::Basic;
        xval_[slack_of[i]] = resid[i];
        binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
      } else {
        const double s = (resid[i] >= 0.0) ? 1.0 : -1.0;
        const int aj = static_cast<int>(cols_.size());
        cols_.push_back({{i, s}});
        bnd_.push_back(Bnd{0.0, kInf});
        cost_.push_back(0.0);
        xval_.push_back(std::abs(resid[i]));
        stat_.push_back(VStat::Basic);
        basis_[i] = aj;
        binv_[static_cast<std::size_t>(i) * m_ + i] = s;  // inverse of diag(s)
        have_artificials_ = true;
      }
    }
    ntot_ = static_cast<int>(cols_.size());
    work_.assign(m_, 0.0);
    pi_.assign(m_, 0.0);
    cb_.assign(m_, 0.0);
    max_pivots_ = opts_.max_pivots > 0 ? opts_.max_pivots
                                       : 20000 + 30L * (static_cast<long>(m_) + ntot_);
    phase1_ = have_artificials_;
  }

  double cost_of(int j) const {
    if (phase1_) return j >= art0_ ? 1.0 : 0.0;
    return cost_[j];
  }

  bool fixed_var(int j) const { return bnd_[j].lo == bnd_[j].hi; }

  void btran() {
    for (int i = 0; i < m_; ++i) cb_[i] = cost_of(basis_[i]);
    kernels::vec_mat(cb_.data(), binv_.data(), m_, m_, pi_.data());
  }

  void ftran(int q) {
    static thread_local std::vector<int> idx;
    static thread_local std::vector<double> vals;
    idx.clear();
    vals.clear();
    for (const Term& t : cols_[q]) {
      idx.push_back(t.var);
      vals.push_back(t.coef);
    }
    kernels::mat_sparse_vec(binv_.data(), m_, m_, idx.data(), vals.data(), idx.size(),
                            work_.data());
  }

  double reduced_cost(int j) const {
    double d = cost_of(j);
    for (const Term& t : cols_[j]) d -= pi_[t.var] * t.coef;
    return d;
  }

  // Entering variable: Devex pricing by default, Bland when stalling.
  int price(int& dir) const {
    int best = -1;
    double best_score = 0.0;
    int best_dir = 0;
    for (int j = 0; j < ntot_; ++j) {
      if (stat_[j] == VStat::Basic) continue;
      if (fixed_var(j)) continue;
      if (!phase1_ && j >= art0_) continue;
      const double d = reduced_cost(j);
      int dj = 0;
      if (stat_[j] == VStat::AtLo && d < -kDualTol) dj = 1;
      else if (stat_[j] == VStat::AtHi && d > kDualTol) dj = -1;
      else if (stat_[j] == VStat::FreeNB && std::abs(d) > kDualTol) dj = d < 0 ? 1 : -1;
      if (dj == 0) continue;
      if (bland_) {
        dir = dj;
        return j;
      }
      const double score = d * d / devex_[j];
      if (score > best_score) {
        best_score = score;
        best = j;
        best_dir = dj;
      }
    }
    dir = best_dir;
    return best;
  }

  // Forrest-Goldfarb weight update; the pivot row of the tableau is just a
  // row of the explicit inverse times the columns, so this costs one sparse
  // sweep per pivot.
  void devex_update(int q, int leave_row, double alpha_q) {
    const double wq = devex_[q];
    if (wq > 1e8) {
      std::fill(devex_.begin(), devex_.end(), 1.0);  // reset the framework
      return;
    }
    const double* rho = binv_.data() + static_cast<std::size_t>(leave_row) * m_;
    const double inv2 = 1.0 / (alpha_q * alpha_q);
    for (int j = 0; j < ntot_; ++j) {
      if (stat_[j] == VStat::Basic || fixed_var(j) || j == q) continue;
      double a = 0.0;
      for (const Term& t : cols_[j]) a += rho[t.var] * t.coef;
      if (a == 0.0) continue;
      const double cand = a * a * inv2 * wq;
      if (cand > devex_[j]) devex_[j] = cand;
    }
    devex_[basis_[leave_row]] = std::max(wq * inv2, 1.0);
  }

  LoopExit iterate(bool phase1) {
    phase1_ = phase1;
    bland_ = false;
    confirmed_ = false;
    fresh_ = false;
    stall_ = 0;
    devex_.assign(ntot_, 1.0);
    while (true) {
      if ((pivots_ & 63) == 0 && seconds_since(t0_) > opts_.time_budget) return LoopExit::TimedOut;
      if (pivots_ > max_pivots_) return LoopExit::TimedOut;
      if (pivots_ > 0 && (pivots_ % kRefactorEvery) == 0) refactorize();

      btran();
      int dir = 0;
      int q = price(dir);
      if (q < 0) {
        // confirm on a freshly refactorized basis before declaring the phase
        // finished; drift in the explicit inverse can fake optimality
        if (confirmed_) return LoopExit::Optimal;
        refactorize();
        confirmed_ = true;
        continue;
      }
      confirmed_ = false;
      ftran(q);

      // Two-pass bounded ratio test: find the tightest step, then take the
      // numerically strongest pivot among the near-ties.
      double theta = kInf;
      const double own_range = bnd_[q].hi - bnd_[q].lo;
      if (std::isfinite(own_range)) theta = own_range;
      auto step_limit = [&](int i, double& ti, bool& at_hi) {
        const double w = work_[i];
        if (std::abs(w) <= kPivTol) return false;
        const int bv = basis_[i];
        const double delta = -dir * w;  // basic value change per unit theta
        if (delta > 0) {
          if (!std::isfinite(bnd_[bv].hi)) return false;
          ti = (bnd_[bv].hi - xval_[bv]) / delta;
          at_hi = true;
        } else {
          if (!std::isfinite(bnd_[bv].lo)) return false;
          ti = (xval_[bv] - bnd_[bv].lo) / (-delta);
          at_hi = false;
        }
        if (ti < 0.0) ti = 0.0;
        return true;
      };
      for (int i = 0; i < m_; ++i) {
        double ti;
        bool at_hi;
        if (step_limit(i, ti, at_hi) && ti < theta) theta = ti;
      }
      if (!std::isfinite(theta)) return LoopExit::Unbounded;

      int leave_row = -1;
      bool leave_at_hi = false;
      const double window = theta + 1e-9 * (1.0 + theta);
      for (int i = 0; i < m_; ++i) {
        double ti;
        bool at_hi;
        if (!step_limit(i, ti, at_hi) || ti > window) continue;
        bool better = leave_row < 0;
        if (!better) {
          better = bland_ ? basis_[i] < basis_[leave_row]
                          : std::abs(work_[i]) > std::abs(work_[leave_row]);
        }
        if (better) {
          leave_row = i;
          leave_at_hi = at_hi;
        }
      }
      if (leave_row >= 0) {
        // clamp to the chosen pivot's own limit so no bound is overshot
        double ti;
        bool at_hi;
        step_limit(leave_row, ti, at_hi);
        theta = ti;
        // a weak pivot right after drift: refresh the inverse and retry once
        if (std::abs(work_[leave_row]) < 1e-6 && !fresh_) {
          refactorize();
          fresh_ = true;
          continue;
        }
      }
      fresh_ = false;

      if (theta > 1e-11) {
        stall_ = 0;
        if (bland_) bland_ = false;
      } else if (++stall_ > 100) {
        bland_ = true;
      }

      const double t = dir * theta;
      if (leave_row < 0) {
        // Bound flip: entering travels to its opposite bound.
        for (int i = 0; i < m_; ++i) {
          const int bv = basis_[i];
          xval_[bv] -= t * work_[i];
        }
        xval_[q] += t;
        stat_[q] = dir > 0 ? VStat::AtHi : VStat::AtLo;
        ++pivots_;
        continue;
      }

      const int lv = basis_[leave_row];
      for (int i = 0; i < m_; ++i) {
        const int bv = basis_[i];
        xval_[bv] -= t * work_[i];
      }
      xval_[q] += t;
      xval_[lv] = leave_at_hi ? bnd_[lv].hi : bnd_[lv].lo;
      stat_[lv] = leave_at_hi ? VStat::AtHi : VStat::AtLo;
      if (!bland_) devex_update(q, leave_row, work_[leave_row]);
      stat_[q] = VStat::Basic;
      basis_[leave_row] = q;
      kernels::pivot_update(binv_.data(), m_, m_, leave_row, work_.data(), work_[leave_row]);
      ++pivots_;
    }
  }

  void refactorize() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      for (const Term& t : cols_[basis_[i]]) B(t.var, i) = t.coef;
    }
    Eigen::MatrixXd inv = B.partialPivLu().inverse();
    if (!inv.allFinite())
      throw std::runtime_error("lp: numerically singular basis during refactorization");
    for (int r = 0; r < m_; ++r) {
      for (int c = 0; c < m_; ++c) binv_[static_cast<std::size_t>(r) * m_ + c] = inv(r, c);
    }
    recompute_basics();
  }

  void recompute_basics() {
    std::vector<double> resid = p_.rhs;
    for (int j = 0; j < ntot_; ++j) {
      if (stat_[j] == VStat::Basic || xval_[j] == 0.0) continue;
      for (const Term& t : cols_[j]) resid[t.var] -= t.coef * xval_[j];
    }
    std::vector<double> xb(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      const double* row = binv_.data() + static_cast<std::size_t>(i) * m_;
      double acc = 0.0;
      for (int k = 0; k < m_; ++k) acc += row[k] * resid[k];
      xb[i] = acc;
    }
    for (int i = 0; i < m_; ++i) xval_[basis_[i]] = xb[i];
  }

  // After phase 1, pivot lingering artificials out of the basis (or pin the
  // row as redundant when its remaining coefficients are all zero).
  void retire_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < art0_) continue;
      double best = kPivTol;
      int enter = -1;
      for (int j = 0; j < art0_; ++j) {
        if (stat_[j] == VStat::Basic || fixed_var(j)) continue;
        double a = 0.0;
        const double* row = binv_.data() + static_cast<std::size_t>(i) * m_;
        for (const Term& t : cols_[j]) a += row[t.var] * t.coef;
        if (std::abs(a) > best) {
          best = std::abs(a);
          enter = j;
        }
      }
      if (enter < 0) continue;  // redundant row, artificial stays at zero
      ftran(enter);
      const int lv = basis_[i];
      xval_[lv] = 0.0;
      stat_[lv] = VStat::AtLo;
      stat_[enter] = VStat::Basic;
      basis_[i] = enter;
      kernels::pivot_update(binv_.data(), m_, m_, i, work_.data(), work_[i]);
      recompute_basics();
    }
    for (int j = art0_; j < ntot_; ++j) {
      bnd_[j] = Bnd{0.0, 0.0};
      if (stat_[j] != VStat::Basic) {
        stat_[j] = VStat::AtLo;
        xval_[j] = 0.0;
      }
    }
  }

  std::vector<double> multipliers() {
    btran();
    return pi_;
  }

  CoreResult timed_out() const {
    CoreResult res;
    res.status = SolveStatus::TimedOut;
    res.pivots = pivots_;
    return res;
  }
};

double problem_violation(const Problem& p, const std::vector<double>& x) {
  double worst = 0.0;
  for (int i = 0; i < p.num_rows(); ++i) {
    double lhs = 0.0;
    for (const Term& t : p.rows[i]) lhs += t.coef * x[t.var];
    const double scale = 1.0 + std::abs(p.rhs[i]);
    if (p.rel[i] == Relation::Equal) {
      worst = std::max(worst, std::abs(lhs - p.rhs[i]) / scale);
    } else {
      worst = std::max(worst, (lhs - p.rhs[i]) / scale);
    }
  }
  for (int j = 0; j < p.nvars; ++j) {
    const double scale = 1.0 + std::abs(x[j]);
    if (std::isfinite(p.bnd[j].lo)) worst = std::max(worst, (p.bnd[j].lo - x[j]) / scale);
    if (std::isfinite(p.bnd[j].hi)) worst = std::max(worst, (x[j] - p.bnd[j].hi) / scale);
  }
  return worst;
}

// Solve the (presolved) problem, choosing between the primal form and the
// internally dualized form. Returns values in the presolved variable space.
CoreResult solve_reduced(const Problem& p, const SolverOptions& opts, Clock::time_point t0) {
  const int m = p.num_rows();
  const int n = p.nvars;
  bool try_dual = false;
  if (opts.form == SolverOptions::Form::Dual) try_dual = true;
  if (opts.form == SolverOptions::Form::Auto) try_dual = (m > 2 * n + 16) && n > 0;

  if (try_dual) {
    DualModel dm = dualize(p);
    SolverOptions dopts = opts;
    dopts.time_budget = opts.time_budget - seconds_since(t0);
    Core core(dm.dual, dopts, Clock::now());
    CoreResult dres;
    try {
      dres = core.run();
    } catch (const std::runtime_error&) {
      dres.status = SolveStatus::Infeasible;  // numerical failure: use the primal
    }
    if (dres.status == SolveStatus::TimedOut) return dres;
    if (dres.status == SolveStatus::Unbounded) {
      CoreResult res;
      res.status = SolveStatus::Infeasible;
      res.pivots = dres.pivots;
      return res;
    }
    if (dres.status == SolveStatus::Optimal) {
      // Multipliers of the dual rows are the primal values (up to sign).
      CoreResult res;
      res.status = SolveStatus::Optimal;
      res.pivots = dres.pivots;
      res.x.assign(n, 0.0);
      for (int j = 0; j < n; ++j) res.x[j] = -dres.row_mult[j];
      res.obj = -dres.obj;
      double cx = 0.0;
      bool finite = true;
      for (int j = 0; j < n; ++j) {
        cx += p.cost[j] * res.x[j];
        finite &= std::isfinite(res.x[j]);
      }
      const double scale = 1.0 + std::abs(res.obj);
      if (finite && problem_violation(p, res.x) <= 10.0 * opts.feas_tol &&
          std::abs(cx - res.obj) <= 1e-6 * scale) {
        res.obj = cx;
        return res;
      }
      // fall through to the primal form
    }
    // Dual infeasible (primal infeasible or unbounded) or failed recovery.
  }

  SolverOptions popts = opts;
  popts.time_budget = opts.time_budget - seconds_since(t0);
  Core core(p, popts, Clock::now());
  return core.run();
}

}  // namespace

void LinearProgram::check_well_formed() const {
  auto check_form = [this](const LinearForm& f, const char* what) {
    for (const Term& t : f) {
      if (t.var < 0 || t.var >= num_vars)
        fail(Errc::malformed_program, std::string(what) + " references undeclared variable " +
                                          std::to_string(t.var));
      if (!std::isfinite(t.coef))
        fail(Errc::malformed_program, std::string(what) + " has non-finite coefficient");
    }
  };
  check_form(objective, "objective");
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    check_form(constraints[i].lhs, "constraint");
    if (!std::isfinite(constraints[i].rhs))
      fail(Errc::malformed_program, "constraint " + std::to_string(i) + " has non-finite rhs");
  }
  if (!lower_bounds.empty() && static_cast<int>(lower_bounds.size()) != num_vars)
    fail(Errc::malformed_program, "lower_bounds size mismatch");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::TimedOut: return "timed_out";
  }
  return "?";
}

LpSolution solve(const LinearProgram& lp, const SolverOptions& opts) {
  const auto t0 = Clock::now();
  lp.check_well_formed();
  LpSolution sol;

  Problem prob = build_problem(lp);
  PresolveResult pre;
  if (opts.presolve) {
    pre = presolve(prob, opts.feas_tol);
  } else {
    pre.reduced = prob;
    pre.var_map.resize(lp.num_vars);
    for (int j = 0; j < lp.num_vars; ++j) pre.var_map[j] = j;
    pre.fixed.assign(lp.num_vars, 0.0);
  }
  if (pre.infeasible) {
    sol.status = SolveStatus::Infeasible;
    sol.solve_seconds = seconds_since(t0);
    return sol;
  }
  if (pre.unbounded) {
    sol.status = SolveStatus::Unbounded;
    sol.solve_seconds = seconds_since(t0);
    return sol;
  }

  CoreResult core = solve_reduced(pre.reduced, opts, t0);
  sol.status = core.status;
  sol.iterations = static_cast<int>(core.pivots);
  sol.solve_seconds = seconds_since(t0);
  if (core.status != SolveStatus::Optimal) return sol;

  sol.values.assign(lp.num_vars, 0.0);
  for (int j = 0; j < lp.num_vars; ++j) {
    sol.values[j] = pre.var_map[j] >= 0 ? core.x[pre.var_map[j]] : pre.fixed[j];
  }
  for (auto it = pre.elims.rbegin(); it != pre.elims.rend(); ++it) {
    double acc = it->rhs;
    for (const Term& t : it->expr) acc -= t.coef * sol.values[t.var];
    sol.values[it->var] = acc / it->coef;
  }
  sol.objective = eval_objective(lp, sol.values);

  bool finite = std::isfinite(sol.objective);
  for (double v : sol.values) finite &= std::isfinite(v);
  if ((!finite || max_violation(lp, sol.values) > 10.0 * opts.feas_tol) &&
      (opts.presolve || opts.form != SolverOptions::Form::Primal)) {
    // Conservative retry on the unreduced primal before giving up.
    SolverOptions retry = opts;
    retry.presolve = false;
    retry.form = SolverOptions::Form::Primal;
    retry.time_budget = opts.time_budget - seconds_since(t0);
    LpSolution again = solve(lp, retry);
    again.solve_seconds = seconds_since(t0);
    return again;
  }
  if (!finite)
    throw std::runtime_error("lp: solver produced a non-finite solution");
  return sol;
}

LpSolution solve(const LinearProgram& lp, double time_budget_seconds) {
  SolverOptions opts;
  opts.time_budget = time_budget_seconds;
  return solve(lp, opts);
}

double max_violation(const LinearProgram& lp, const std::vector<double>& values) {
  double worst = 0.0;
  for (const Constraint& c : lp.constraints) {
    double lhs = 0.0;
    for (const Term& t : c.lhs) lhs += t.coef * values[t.var];
    const double scale = 1.0 + std::abs(c.rhs);
    switch (c.rel) {
      case Relation::LessEq: worst = std::max(worst, (lhs - c.rhs) / scale); break;
      case Relation::GreaterEq: worst = std::max(worst, (c.rhs - lhs) / scale); break;
      case Relation::Equal: worst = std::max(worst, std::abs(lhs - c.rhs) / scale); break;
    }
  }
  if (!lp.lower_bounds.empty()) {
    for (int j = 0; j < lp.num_vars; ++j) {
      if (std::isfinite(lp.lower_bounds[j]))
        worst = std::max(worst, lp.lower_bounds[j] - values[j]);
    }
  }
  return worst;
}

double eval_objective(const LinearProgram& lp, const std::vector<double>& values) {
  double obj = 0.0;
  for (const Term& t : lp.objective) obj += t.coef * values[t.var];
  return obj;
}

void write_lp_format(const LinearProgram& lp, std::ostream& os,
                     const std::vector<std::string>& var_names) {
  auto name = [&](int j) {
    if (j < static_cast<int>(var_names.size())) return var_names[j];
    return "x" + std::to_string(j);
  };
  auto put_form = [&](const LinearForm& f) {
    if (f.empty()) {
      os << "0 " << name(0);
      return;
    }
    bool first = true;
    for (const Term& t : f) {
      if (first) {
        os << t.coef << " " << name(t.var);
        first = false;
      } else if (t.coef >= 0) {
        os << " + " << t.coef << " " << name(t.var);
      } else {
        os << " - " << -t.coef << " " << name(t.var);
      }
    }
  };
  os.precision(17);
  os << "\\ exported by pwalyap\nMinimize\n obj: ";
  put_form(lp.objective);
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
    const Constraint& c = lp.constraints[i];
    os << " c" << i << ": ";
    put_form(c.lhs);
    switch (c.rel) {
      case Relation::LessEq: os << " <= "; break;
      case Relation::GreaterEq: os << " >= "; break;
      case Relation::Equal: os << " = "; break;
    }
    os << c.rhs << "\n";
  }
  os << "Bounds\n";
  for (int j = 0; j < lp.num_vars; ++j) {
    const bool has_lo = !lp.lower_bounds.empty() && std::isfinite(lp.lower_bounds[j]);
    if (has_lo) {
      os << " " << name(j) << " >= " << lp.lower_bounds[j] << "\n";
    } else {
      os << " " << name(j) << " free\n";
    }
  }
  os << "End\n";
}

}  // namespace pwalyap::lp
