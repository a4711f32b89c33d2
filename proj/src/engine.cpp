#include "pwalyap/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace pwalyap::engine {

using model::Cell;
using model::LyapunovCandidate;
using model::Partition;

namespace {
using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}
}  // namespace

const char* to_string(AnalysisStatus s) {
  return s == AnalysisStatus::Valid ? "valid" : "timed-out";
}

AnalysisResult analyze(const Partition& input, refine::Strategy strategy,
                       const lyap::SearchConfig& config, const IterationCallback& on_iteration) {
  config.check();
  const auto t0 = Clock::now();

  auto violations = model::validate_partition(input);
  if (model::has_errors(violations))
    fail(Errc::invalid_partition, "partition has structural violations; run validate");
  for (const auto& v : violations) {
    if (v.kind == model::Violation::Kind::origin_not_vertex)
      fail(Errc::invalid_partition,
           "origin lies inside a cell without being a vertex; run ensure-origin first");
  }

  AnalysisResult res;
  res.partition = input;

  for (int iter = 1;; ++iter) {
    lyap::LpIndexMap map;
    auto prog = lyap::build_lp(res.partition, config, &map);
    const double remaining = config.timeout_seconds - seconds_since(t0);
    if (remaining <= 0) {
      res.status = AnalysisStatus::TimedOut;
      return res;
    }
    auto sol = lp::solve(prog, remaining);
    if (sol.status == lp::SolveStatus::TimedOut) {
      res.status = AnalysisStatus::TimedOut;
      return res;
    }
    res.candidate = lyap::extract_candidate(sol, map, res.partition, config);

    IterationRecord rec;
    rec.iteration = iter;
    rec.cell_count = static_cast<int>(res.partition.cells.size());
    rec.slack_sum = 0.0;
    for (const auto& piece : res.candidate.pieces) rec.slack_sum += std::max(piece.tau, 0.0);
    rec.t_opt = sol.solve_seconds;
    rec.strategy = strategy;

    if (res.candidate.valid) {
      rec.vertices_added = 0;
      res.records.push_back(rec);
      if (on_iteration) on_iteration(rec);
      auto report = verify_certificate(res.partition, res.candidate, config);
      if (!report.passed())
        fail(Errc::certificate_violation,
             "solver returned a zero-slack candidate that fails the independent recheck: " +
                 report.violations.front().what);
      res.status = AnalysisStatus::Valid;
      return res;
    }

    if (seconds_since(t0) >= config.timeout_seconds) {
      rec.vertices_added = 0;
      res.records.push_back(rec);
      if (on_iteration) on_iteration(rec);
      res.status = AnalysisStatus::TimedOut;
      return res;
    }

    refine::RefinementPlan plan;
    try {
      plan = refine::propose(strategy, res.partition, res.candidate, config.zero_tolerance);
    } catch (const Error&) {
      // refinement exhausted (origin-pinned edges etc.): no way to make
      // progress, report as a timeout with the records so far
      rec.vertices_added = 0;
      res.records.push_back(rec);
      if (on_iteration) on_iteration(rec);
      res.status = AnalysisStatus::TimedOut;
      return res;
    }
    rec.vertices_added = static_cast<int>(plan.buffer.size());
    res.records.push_back(rec);
    if (on_iteration) on_iteration(rec);
    res.partition = refine::apply_plan(res.partition, plan);
  }
}

std::vector<MetricsRow> metrics(const std::vector<IterationRecord>& records) {
  if (records.empty()) fail(Errc::empty_records, "no iteration records");
  double total_cells = 0.0;
  std::vector<double> cum(records.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    acc += records[i].t_opt;
    cum[i] = acc;
    total_cells += records[i].cell_count;
  }
  const double total_time = cum.back();
  if (!(total_time > 0) || !(total_cells > 0))
    fail(Errc::empty_records, "degenerate totals in iteration records");
  std::vector<MetricsRow> rows(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    rows[i].t_opt_norm = cum[i] / total_time;
    rows[i].n_r_norm = records[i].cell_count / total_cells;
  }
  return rows;
}

VerifyReport verify_certificate(const Partition& part, const LyapunovCandidate& cand,
                                const lyap::SearchConfig& config, std::uint64_t seed,
                                int samples) {
  VerifyReport report;
  const int n = part.dimension;
  const double tol = config.zero_tolerance;
  auto add = [&](const std::string& what, int cell, double residual) {
    report.violations.push_back({what, cell, residual});
  };

  for (std::size_t ci = 0; ci < part.cells.size(); ++ci) {
    const Cell& cell = part.cells[ci];
    const auto& piece = cand.pieces[ci];
    if (piece.cell_id != cell.id) add("candidate/partition cell order mismatch", cell.id, 0);
    for (auto vid : cell.vertices) {
      const auto& v = part.vertices.point(vid);
      if (geom::is_origin(v)) continue;
      ++report.vertex_checks;
      Eigen::VectorXd w = cell.law.A * v;
      if (!cell.contains_origin) w += cell.law.a;
      const double decrease = piece.p.dot(w);
      if (decrease > -config.eps1 + tol + 1e-12)
        add("decrease violated at vertex " + std::to_string(vid), cell.id,
            decrease + config.eps1);
      const double value = piece.p.dot(v) + piece.q;
      if (value < config.eps2 - tol - 1e-12)
        add("positivity violated at vertex " + std::to_string(vid), cell.id,
            config.eps2 - value);
    }
  }

  // Continuity across every pair of cells sharing a vertex.
  std::vector<std::vector<int>> incident(part.vertices.size());
  for (std::size_t ci = 0; ci < part.cells.size(); ++ci) {
    for (auto vid : part.cells[ci].vertices) incident[vid].push_back(static_cast<int>(ci));
  }
  for (int vid = 0; vid < part.vertices.size(); ++vid) {
    const auto& inc = incident[vid];
    const auto& v = part.vertices.point(vid);
    for (std::size_t x = 0; x < inc.size(); ++x) {
      for (std::size_t y = x + 1; y < inc.size(); ++y) {
        const auto& pa = cand.pieces[inc[x]];
        const auto& pb = cand.pieces[inc[y]];
        const double va = pa.p.dot(v) + pa.q;
        const double vb = pb.p.dot(v) + pb.q;
        if (std::abs(va - vb) > 1e-8)
          add("continuity violated at vertex " + std::to_string(vid),
              part.cells[inc[x]].id, std::abs(va - vb));
      }
    }
  }

  // Random interior sampling audit.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cell_pick(0, static_cast<int>(part.cells.size()) - 1);
  std::exponential_distribution<double> expd(1.0);
  for (int s = 0; s < samples; ++s) {
    const int ci = cell_pick(rng);
    const Cell& cell = part.cells[ci];
    const auto pts = part.cell_points(cell);
    std::vector<double> wgt(pts.size());
    double sum = 0.0;
    for (double& w : wgt) {
      w = expd(rng) + 1e-9;
      sum += w;
    }
    geom::Point x = geom::Point::Zero(n);
    for (std::size_t k = 0; k < pts.size(); ++k) x += (wgt[k] / sum) * pts[k];
    if (x.norm() <= 1e-9) continue;  // V(0)=0 identically
    ++report.samples;
    const auto& piece = cand.pieces[ci];
    const double value = piece.p.dot(x) + piece.q;
    const double vdot = piece.p.dot(model::eval_dynamics(cell, x));
    if (value <= 0)
      add("sampled V <= 0", cell.id, -value);
    if (vdot >= 0)
      add("sampled Vdot >= 0", cell.id, vdot);
  }
  return report;
}

}  // namespace pwalyap::engine
