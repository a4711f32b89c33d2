#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>

#include "pwalyap/engine.hpp"
#include "test_support.hpp"

using namespace pwalyap;
using engine::AnalysisStatus;
using model::Partition;
using test_support::pt;

namespace {

Partition stable_single_cell() {
  Partition part;
  part.dimension = 2;
  const auto v0 = part.vertices.intern(pt({1, 0}));
  const auto v1 = part.vertices.intern(pt({0, 1}));
  const auto v2 = part.vertices.intern(pt({1, 1}));
  model::AffineLaw l{(-Eigen::MatrixXd::Identity(2, 2)).eval(), Eigen::VectorXd::Zero(2)};
  part.cells.push_back({0, {v0, v1, v2}, l, false});
  return part;
}

Partition unstable_box() {
  Partition part;
  part.dimension = 2;
  const auto v0 = part.vertices.intern(pt({-1, -1}));
  const auto v1 = part.vertices.intern(pt({1, -1}));
  const auto v2 = part.vertices.intern(pt({1, 1}));
  const auto v3 = part.vertices.intern(pt({-1, 1}));
  model::AffineLaw l{Eigen::MatrixXd::Identity(2, 2).eval(), Eigen::VectorXd::Zero(2)};
  part.cells.push_back({0, {v0, v1, v2, v3}, l, false});
  return model::ensure_origin_vertex(part);
}

}  // namespace

TEST_CASE("stable single cell is certified in one iteration") {
  lyap::SearchConfig config;
  auto res = engine::analyze(stable_single_cell(), refine::Strategy::Naive, config);
  CHECK(res.status == AnalysisStatus::Valid);
  CHECK(res.records.size() == 1);
  CHECK(res.records[0].vertices_added == 0);
  CHECK(res.candidate.valid);
  CHECK(engine::verify_certificate(res.partition, res.candidate, config).passed());
}

TEST_CASE("unstable dynamics never certify: timeout with persistent slack") {
  lyap::SearchConfig config;
  config.timeout_seconds = 1.0;
  auto res = engine::analyze(unstable_box(), refine::Strategy::Naive, config);
  CHECK(res.status == AnalysisStatus::TimedOut);
  CHECK(res.records.size() >= 1);
  for (const auto& rec : res.records) CHECK(rec.slack_sum > config.zero_tolerance);
}

TEST_CASE("flower system certifies under every strategy") {
  for (auto strategy : {refine::Strategy::Naive, refine::Strategy::LyapunovBased,
                        refine::Strategy::VectorField}) {
    CAPTURE(refine::to_string(strategy));
    lyap::SearchConfig config;
    config.timeout_seconds = 120.0;
    auto res = engine::analyze(test_support::flower(), strategy, config);
    REQUIRE(res.status == AnalysisStatus::Valid);
    CHECK(res.candidate.valid);
    CHECK(res.partition.cells.size() >= 4);
    auto report = engine::verify_certificate(res.partition, res.candidate, config);
    CHECK(report.passed());
    // cells never decrease between iterations
    for (std::size_t i = 1; i < res.records.size(); ++i)
      CHECK(res.records[i].cell_count >= res.records[i - 1].cell_count);
  }
}

TEST_CASE("analysis is deterministic modulo wall-clock fields") {
  lyap::SearchConfig config;
  config.timeout_seconds = 120.0;
  auto a = engine::analyze(test_support::flower(), refine::Strategy::VectorField, config);
  auto b = engine::analyze(test_support::flower(), refine::Strategy::VectorField, config);
  REQUIRE(a.status == b.status);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].cell_count == b.records[i].cell_count);
    CHECK(a.records[i].slack_sum == b.records[i].slack_sum);
    CHECK(a.records[i].vertices_added == b.records[i].vertices_added);
  }
  REQUIRE(a.candidate.pieces.size() == b.candidate.pieces.size());
  for (std::size_t i = 0; i < a.candidate.pieces.size(); ++i)
    CHECK(a.candidate.pieces[i].p == b.candidate.pieces[i].p);
}

TEST_CASE("analyze requires the origin to be a vertex when it is in the domain") {
  Partition part;
  part.dimension = 2;
  const auto v0 = part.vertices.intern(pt({-1, -1}));
  const auto v1 = part.vertices.intern(pt({1, -1}));
  const auto v2 = part.vertices.intern(pt({1, 1}));
  const auto v3 = part.vertices.intern(pt({-1, 1}));
  model::AffineLaw l{(-Eigen::MatrixXd::Identity(2, 2)).eval(), Eigen::VectorXd::Zero(2)};
  part.cells.push_back({0, {v0, v1, v2, v3}, l, false});
  lyap::SearchConfig config;
  CHECK_THROWS_AS(engine::analyze(part, refine::Strategy::Naive, config), Error);
}

TEST_CASE("timeout is honored at iteration boundaries") {
  lyap::SearchConfig config;
  config.timeout_seconds = 1e-6;
  const auto t0 = std::chrono::steady_clock::now();
  auto res = engine::analyze(unstable_box(), refine::Strategy::VectorField, config);
  const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(res.status == AnalysisStatus::TimedOut);
  CHECK(took < 5.0);  // budget + at most one LP solve and overhead
}

TEST_CASE("metrics normalization") {
  using engine::IterationRecord;
  SUBCASE("single record") {
    std::vector<IterationRecord> recs(1);
    recs[0].cell_count = 7;
    recs[0].t_opt = 0.3;
    auto rows = engine::metrics(recs);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].t_opt_norm == 1.0);
    CHECK(rows[0].n_r_norm == 1.0);
  }
  SUBCASE("documented accumulation (1,1,2)") {
    std::vector<IterationRecord> recs(3);
    for (int i = 0; i < 3; ++i) recs[i].cell_count = 4 + i;
    recs[0].t_opt = 1;
    recs[1].t_opt = 1;
    recs[2].t_opt = 2;
    auto rows = engine::metrics(recs);
    CHECK(rows[0].t_opt_norm == doctest::Approx(0.25));
    CHECK(rows[1].t_opt_norm == doctest::Approx(0.5));
    CHECK(rows[2].t_opt_norm == 1.0);  // exactly
    for (const auto& r : rows) {
      CHECK(r.t_opt_norm >= 0);
      CHECK(r.t_opt_norm <= 1);
      CHECK(r.n_r_norm >= 0);
      CHECK(r.n_r_norm <= 1);
    }
    for (std::size_t i = 1; i < rows.size(); ++i)
      CHECK(rows[i].t_opt_norm >= rows[i - 1].t_opt_norm);
  }
  SUBCASE("empty and zero-time records are errors") {
    CHECK_THROWS_AS(engine::metrics({}), Error);
    std::vector<IterationRecord> recs(1);
    recs[0].cell_count = 4;
    recs[0].t_opt = 0.0;
    CHECK_THROWS_AS(engine::metrics(recs), Error);
  }
}

TEST_CASE("verify_certificate flags corruption") {
  lyap::SearchConfig config;
  auto res = engine::analyze(stable_single_cell(), refine::Strategy::Naive, config);
  REQUIRE(res.status == AnalysisStatus::Valid);

  SUBCASE("clean certificate passes") {
    auto report = engine::verify_certificate(res.partition, res.candidate, config);
    CHECK(report.passed());
    CHECK(report.samples > 900);
  }
  SUBCASE("flipping p breaks decrease or positivity at a named vertex") {
    auto bad = res.candidate;
    bad.pieces[0].p = -bad.pieces[0].p;
    auto report = engine::verify_certificate(res.partition, bad, config);
    CHECK_FALSE(report.passed());
  }
  SUBCASE("continuity corruption is caught on shared vertices") {
    lyap::SearchConfig cfg;
    cfg.timeout_seconds = 60.0;
    auto fl = engine::analyze(test_support::flower(), refine::Strategy::VectorField, cfg);
    REQUIRE(fl.status == AnalysisStatus::Valid);
    auto bad = fl.candidate;
    bad.pieces[0].p[0] += 0.05;  // shifts V on cell 0's shared vertices
    auto report = engine::verify_certificate(fl.partition, bad, cfg);
    bool continuity_hit = false;
    for (const auto& item : report.violations)
      continuity_hit |= item.what.find("continuity") != std::string::npos;
    CHECK(continuity_hit);
  }
}

TEST_CASE("decrease along trajectories of the certified flower system") {
  lyap::SearchConfig config;
  config.timeout_seconds = 120.0;
  auto res = engine::analyze(test_support::flower(), refine::Strategy::LyapunovBased, config);
  REQUIRE(res.status == AnalysisStatus::Valid);

  auto value_at = [&](const geom::Point& x) {
    const int ci = model::cell_index_containing(res.partition, x);
    REQUIRE(ci >= 0);
    return res.candidate.pieces[ci].p.dot(x) + res.candidate.pieces[ci].q;
  };

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  int checked = 0;
  for (int trial = 0; trial < 25; ++trial) {
    geom::Point x0 = pt({u(rng), u(rng)});
    if (x0.norm() < 0.2) continue;
    auto tr = model::simulate_trajectory(res.partition, x0, 1e-3, 400);
    for (std::size_t k = 0; k + 1 < tr.points.size(); ++k) {
      if (tr.points[k].norm() < 1e-3) break;
      CHECK(value_at(tr.points[k + 1]) < value_at(tr.points[k]));
    }
    ++checked;
  }
  CHECK(checked >= 15);
}
