#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pwalyap/lyapunov.hpp"
#include "test_support.hpp"

using namespace pwalyap;
using test_support::pt;

namespace {

model::Partition single_i1_cell() {
  model::Partition part;
  part.dimension = 2;
  const auto v0 = part.vertices.intern(pt({1, 0}));
  const auto v1 = part.vertices.intern(pt({0, 1}));
  const auto v2 = part.vertices.intern(pt({1, 1}));
  model::AffineLaw l{(-Eigen::MatrixXd::Identity(2, 2)).eval(), Eigen::VectorXd::Zero(2)};
  part.cells.push_back({0, {v0, v1, v2}, l, false});
  return part;
}

}  // namespace

TEST_CASE("single I_1 simplex cell: documented variable and constraint counts") {
  auto part = single_i1_cell();
  lyap::SearchConfig config;
  lyap::LpIndexMap map;
  auto prog = lyap::build_lp(part, config, &map);
  CHECK(prog.num_vars == 4);                       // p (2) + q + tau
  CHECK(prog.constraints.size() == 7);             // 3 decrease + 3 positivity + tau >= 0
  CHECK(map.cells.size() == 1);
  CHECK(map.cells[0].q >= 0);
}

TEST_CASE("stable single cell admits a zero-slack certificate") {
  auto part = single_i1_cell();
  lyap::SearchConfig config;
  lyap::LpIndexMap map;
  auto prog = lyap::build_lp(part, config, &map);
  auto sol = lp::solve(prog);
  REQUIRE(sol.status == lp::SolveStatus::Optimal);
  CHECK(sol.objective <= config.zero_tolerance);
  auto cand = lyap::extract_candidate(sol, map, part, config);
  CHECK(cand.valid);
  CHECK(lyap::slack_cells(cand, config.zero_tolerance).empty());

  // hand certificate p = (1,1), q = 0 satisfies the same rows
  for (const auto& c : part.cells) {
    for (auto vid : c.vertices) {
      const auto& v = part.vertices.point(vid);
      CHECK(pt({1, 1}).dot(model::eval_dynamics(c, v)) <= -config.eps1);
      CHECK(pt({1, 1}).dot(v) >= config.eps2);
    }
  }
}

TEST_CASE("flower LP structure: continuity equalities at every shared vertex") {
  auto part = test_support::flower();
  lyap::SearchConfig config;
  lyap::LpIndexMap map;
  auto prog = lyap::build_lp(part, config, &map);
  // all four cells contain the origin: p only, plus tau
  CHECK(prog.num_vars == 4 * 3);
  int equalities = 0;
  for (const auto& c : prog.constraints)
    if (c.rel == lp::Relation::Equal) ++equalities;
  // one chain link per box corner shared by two cones; the origin rows are
  // identities (q = 0 on both sides) and are not emitted
  CHECK(equalities == 4);
  // decrease/positivity skip the origin vertex: 2 eligible vertices per cell
  int ineq = static_cast<int>(prog.constraints.size()) - equalities;
  CHECK(ineq == 4 * (2 + 2) + 4);
}

TEST_CASE("empty partition is rejected") {
  model::Partition part;
  part.dimension = 2;
  lyap::SearchConfig config;
  CHECK_THROWS_AS(lyap::build_lp(part, config), Error);
}

TEST_CASE("extract_candidate flags slack cells and rejects non-optimal input") {
  auto part = single_i1_cell();
  lyap::SearchConfig config;
  lyap::LpIndexMap map;
  auto prog = lyap::build_lp(part, config, &map);
  auto sol = lp::solve(prog);
  REQUIRE(sol.status == lp::SolveStatus::Optimal);

  // hand-corrupt the slack to simulate an invalid candidate
  auto corrupted = sol;
  corrupted.values[map.cells[0].tau] = 0.3;
  auto cand = lyap::extract_candidate(corrupted, map, part, config);
  CHECK_FALSE(cand.valid);
  auto ids = lyap::slack_cells(cand, config.zero_tolerance);
  CHECK(ids == std::set<int>{0});

  auto timed_out = sol;
  timed_out.status = lp::SolveStatus::TimedOut;
  CHECK_THROWS_AS(lyap::extract_candidate(timed_out, map, part, config), Error);
}

TEST_CASE("slack cells ignore sub-tolerance values") {
  model::LyapunovCandidate cand;
  cand.pieces.push_back({0, pt({1, 0}), 0.0, 0.0});
  cand.pieces.push_back({1, pt({1, 0}), 0.0, 1e-12});
  cand.pieces.push_back({2, pt({1, 0}), 0.0, 0.5});
  CHECK(lyap::slack_cells(cand, 1e-8) == std::set<int>{2});
  CHECK(lyap::slack_cells(cand, 1e-13) == std::set<int>{1, 2});
}

TEST_CASE("feasibility property: random continuous partitions never give Infeasible") {
  std::mt19937_64 rng(31337);
  int solved = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = trial % 2 == 0 ? 2 : 3;
    model::Partition part;
    do {
      part = test_support::random_continuous_partition(rng, n, n == 2 ? 4 : 1);
    } while (static_cast<int>(part.cells.size()) > 20);
    lyap::SearchConfig config;
    auto prog = lyap::build_lp(part, config);
    auto sol = lp::solve(prog, 30.0);
    REQUIRE_MESSAGE(sol.status == lp::SolveStatus::Optimal, "trial ", trial, " status ",
                    lp::to_string(sol.status));
    CHECK(lp::max_violation(prog, sol.values) <= 1e-8);
    ++solved;
  }
  CHECK(solved == 100);
}

TEST_CASE("certificate soundness recheck against the raw inequalities") {
  std::mt19937_64 rng(77);
  auto part = test_support::random_continuous_partition(rng, 2, 3);
  lyap::SearchConfig config;
  lyap::LpIndexMap map;
  auto prog = lyap::build_lp(part, config, &map);
  auto sol = lp::solve(prog);
  REQUIRE(sol.status == lp::SolveStatus::Optimal);
  auto cand = lyap::extract_candidate(sol, map, part, config);

  for (std::size_t ci = 0; ci < part.cells.size(); ++ci) {
    const auto& cell = part.cells[ci];
    const auto& piece = cand.pieces[ci];
    for (auto vid : cell.vertices) {
      const auto& v = part.vertices.point(vid);
      if (geom::is_origin(v)) continue;
      Eigen::VectorXd w = cell.law.A * v;
      if (!cell.contains_origin) w += cell.law.a;
      CHECK(piece.p.dot(w) <= -config.eps1 + piece.tau + 1e-8);
      CHECK(piece.p.dot(v) + piece.q >= config.eps2 - 1e-8);
    }
  }
  // continuity across each shared vertex
  for (int vid = 0; vid < part.vertices.size(); ++vid) {
    const auto& v = part.vertices.point(vid);
    std::vector<double> vals;
    for (std::size_t ci = 0; ci < part.cells.size(); ++ci) {
      const auto& cell = part.cells[ci];
      if (std::find(cell.vertices.begin(), cell.vertices.end(), vid) == cell.vertices.end())
        continue;
      vals.push_back(cand.pieces[ci].p.dot(v) + cand.pieces[ci].q);
    }
    for (double x : vals) CHECK(std::abs(x - vals.front()) <= 1e-8);
  }
}
