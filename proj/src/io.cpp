#include "pwalyap/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace pwalyap::io {

using nlohmann::json;

namespace {

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(Errc::io_error, "cannot open " + tmp + " for writing");
    os << content;
    if (!os) fail(Errc::io_error, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(Errc::io_error, "rename to " + path + " failed: " + ec.message());
}

json slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::io_error, "cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    fail(Errc::parse_error, path + ": " + e.what());
  }
  return j;
}

json matrix_json(const std::vector<std::vector<double>>& m) { return json(m); }

std::vector<std::vector<double>> matrix_from(const json& j, const char* what) {
  if (!j.is_array()) fail(Errc::parse_error, std::string(what) + " must be an array");
  std::vector<std::vector<double>> out;
  for (const auto& row : j) {
    if (!row.is_array()) fail(Errc::parse_error, std::string(what) + " rows must be arrays");
    out.push_back(row.get<std::vector<double>>());
  }
  return out;
}

}  // namespace

PartitionFile to_file(const model::Partition& part, std::map<std::string, std::string> metadata) {
  PartitionFile f;
  f.dimension = part.dimension;
  f.metadata = std::move(metadata);
  for (int i = 0; i < part.vertices.size(); ++i) {
    const auto& p = part.vertices.point(i);
    f.vertices.emplace_back(p.data(), p.data() + p.size());
  }
  for (const auto& c : part.cells) {
    PartitionFile::CellData cd;
    cd.id = c.id;
    cd.vertices.assign(c.vertices.begin(), c.vertices.end());
    cd.A.resize(part.dimension);
    for (int r = 0; r < part.dimension; ++r) {
      cd.A[r].resize(part.dimension);
      for (int col = 0; col < part.dimension; ++col) cd.A[r][col] = c.law.A(r, col);
    }
    cd.a.assign(c.law.a.data(), c.law.a.data() + c.law.a.size());
    f.cells.push_back(std::move(cd));
  }
  return f;
}

model::Partition to_partition(const PartitionFile& f) {
  const int n = f.dimension;
  if (n <= 0) fail(Errc::parse_error, "dimension must be positive");
  model::Partition part;
  part.dimension = n;
  std::vector<geom::VertexId> ids;
  for (std::size_t i = 0; i < f.vertices.size(); ++i) {
    if (static_cast<int>(f.vertices[i].size()) != n)
      fail(Errc::parse_error, "vertex " + std::to_string(i) + " has wrong dimension");
    geom::Point p(n);
    for (int d = 0; d < n; ++d) p[d] = f.vertices[i][d];
    ids.push_back(part.vertices.intern(p));
  }
  for (const auto& cd : f.cells) {
    model::Cell c;
    c.id = cd.id;
    for (int v : cd.vertices) {
      if (v < 0 || v >= static_cast<int>(f.vertices.size()))
        fail(Errc::parse_error, "cell " + std::to_string(cd.id) + " references vertex " +
                                    std::to_string(v) + " out of range");
      c.vertices.push_back(ids[v]);
    }
    if (static_cast<int>(cd.A.size()) != n || static_cast<int>(cd.a.size()) != n)
      fail(Errc::parse_error, "cell " + std::to_string(cd.id) + " has a malformed law");
    c.law.A.resize(n, n);
    for (int r = 0; r < n; ++r) {
      if (static_cast<int>(cd.A[r].size()) != n)
        fail(Errc::parse_error, "cell " + std::to_string(cd.id) + " has a malformed A row");
      for (int col = 0; col < n; ++col) c.law.A(r, col) = cd.A[r][col];
    }
    c.law.a.resize(n);
    for (int d = 0; d < n; ++d) c.law.a[d] = cd.a[d];
    c.contains_origin = false;
    for (auto v : c.vertices) c.contains_origin |= geom::is_origin(part.vertices.point(v));
    part.cells.push_back(std::move(c));
  }
  std::sort(part.cells.begin(), part.cells.end(),
            [](const model::Cell& a, const model::Cell& b) { return a.id < b.id; });
  return part;
}

PartitionFile load_partition_file(const std::string& path) {
  json j = slurp(path);
  PartitionFile f;
  try {
    f.dimension = j.at("dimension").get<int>();
    f.vertices = matrix_from(j.at("vertices"), "vertices");
    for (const auto& cj : j.at("cells")) {
      PartitionFile::CellData cd;
      cd.id = cj.at("id").get<int>();
      cd.vertices = cj.at("vertices").get<std::vector<int>>();
      cd.A = matrix_from(cj.at("A"), "A");
      cd.a = cj.at("a").get<std::vector<double>>();
      f.cells.push_back(std::move(cd));
    }
    if (j.contains("metadata")) {
      for (const auto& [k, v] : j.at("metadata").items()) {
        if (v.is_string()) f.metadata[k] = v.get<std::string>();
      }
    }
    if (j.contains("sampling_time") && !j.at("sampling_time").is_null())
      f.sampling_time = j.at("sampling_time").get<double>();
    if (j.contains("plant_A")) f.plant_A = matrix_from(j.at("plant_A"), "plant_A");
    if (j.contains("plant_B")) f.plant_B = j.at("plant_B").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(Errc::parse_error, path + ": " + e.what());
  }
  return f;
}

void save_partition_file(const PartitionFile& f, const std::string& path) {
  json j;
  j["dimension"] = f.dimension;
  j["vertices"] = matrix_json(f.vertices);
  j["cells"] = json::array();
  for (const auto& cd : f.cells) {
    json cj;
    cj["id"] = cd.id;
    cj["vertices"] = cd.vertices;
    cj["A"] = matrix_json(cd.A);
    cj["a"] = cd.a;
    j["cells"].push_back(cj);
  }
  if (!f.metadata.empty()) j["metadata"] = f.metadata;
  if (f.sampling_time) j["sampling_time"] = *f.sampling_time;
  if (!f.plant_A.empty()) j["plant_A"] = matrix_json(f.plant_A);
  if (!f.plant_B.empty()) j["plant_B"] = f.plant_B;
  atomic_write(path, j.dump(2) + "\n");
}

CertificateFile make_certificate(const engine::AnalysisResult& result,
                                 const lyap::SearchConfig& config, refine::Strategy strategy) {
  CertificateFile cf;
  cf.status = engine::to_string(result.status);
  cf.strategy = refine::to_string(strategy);
  cf.config = config;
  for (const auto& piece : result.candidate.pieces) {
    CertificateFile::CellEntry e;
    e.id = piece.cell_id;
    e.p.assign(piece.p.data(), piece.p.data() + piece.p.size());
    e.q = piece.q;
    e.tau = piece.tau;
    cf.cells.push_back(std::move(e));
  }
  cf.iterations = result.records;
  return cf;
}

CertificateFile load_certificate_file(const std::string& path) {
  json j = slurp(path);
  CertificateFile cf;
  try {
    cf.status = j.at("status").get<std::string>();
    cf.strategy = j.at("strategy").get<std::string>();
    cf.config.eps1 = j.at("config").at("eps1").get<double>();
    cf.config.eps2 = j.at("config").at("eps2").get<double>();
    cf.config.zero_tolerance = j.at("config").at("zero_tolerance").get<double>();
    cf.config.timeout_seconds = j.at("config").at("timeout_seconds").get<double>();
    for (const auto& cj : j.at("cells")) {
      CertificateFile::CellEntry e;
      e.id = cj.at("id").get<int>();
      e.p = cj.at("p").get<std::vector<double>>();
      e.q = cj.at("q").get<double>();
      e.tau = cj.at("tau").get<double>();
      cf.cells.push_back(std::move(e));
    }
    if (j.contains("iterations")) {
      for (const auto& rj : j.at("iterations")) {
        engine::IterationRecord r;
        r.iteration = rj.at("iteration").get<int>();
        r.cell_count = rj.at("cells").get<int>();
        r.slack_sum = rj.at("slack_sum").get<double>();
        r.t_opt = rj.at("t_opt").get<double>();
        r.strategy = refine::strategy_from_name(rj.at("strategy").get<std::string>());
        r.vertices_added = rj.at("vertices_added").get<int>();
        cf.iterations.push_back(r);
      }
    }
  } catch (const json::exception& e) {
    fail(Errc::parse_error, path + ": " + e.what());
  }
  return cf;
}

void save_certificate_file(const CertificateFile& cf, const std::string& path) {
  json j;
  j["status"] = cf.status;
  j["strategy"] = cf.strategy;
  j["config"] = {{"eps1", cf.config.eps1},
                 {"eps2", cf.config.eps2},
                 {"zero_tolerance", cf.config.zero_tolerance},
                 {"timeout_seconds", cf.config.timeout_seconds}};
  j["cells"] = json::array();
  for (const auto& e : cf.cells) {
    j["cells"].push_back({{"id", e.id}, {"p", e.p}, {"q", e.q}, {"tau", e.tau}});
  }
  j["iterations"] = json::array();
  for (const auto& r : cf.iterations) {
    j["iterations"].push_back({{"iteration", r.iteration},
                               {"cells", r.cell_count},
                               {"slack_sum", r.slack_sum},
                               {"t_opt", r.t_opt},
                               {"strategy", refine::to_string(r.strategy)},
                               {"vertices_added", r.vertices_added}});
  }
  atomic_write(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Bundled example systems.
// ---------------------------------------------------------------------------

namespace {

PartitionFile flower_file() {
  model::Partition part;
  part.dimension = 2;
  const auto v0 = part.vertices.intern(geom::Point::Zero(2));
  auto mk = [&](double x, double y) {
    geom::Point p(2);
    p << x, y;
    return part.vertices.intern(p);
  };
  const auto v1 = mk(1, 1), v2 = mk(-1, 1), v3 = mk(-1, -1), v4 = mk(1, -1);
  Eigen::MatrixXd A1(2, 2), A2(2, 2);
  A1 << -0.1, 1, -5, -0.1;
  A2 << -0.1, 5, -1, -0.1;
  const model::AffineLaw odd{A1, Eigen::VectorXd::Zero(2)};
  const model::AffineLaw even{A2, Eigen::VectorXd::Zero(2)};
  part.cells.push_back({0, {v0, v1, v2}, odd, true});
  part.cells.push_back({1, {v0, v2, v3}, even, true});
  part.cells.push_back({2, {v0, v3, v4}, odd, true});
  part.cells.push_back({3, {v0, v4, v1}, even, true});
  return to_file(part, {{"name", "flower"},
                        {"description",
                         "2-D conewise spiral system: two modes alternating over four cones "
                         "of the unit box, origin as a shared vertex"}});
}

PartitionFile canonical4d_file() {
  const int n = 4;
  std::vector<geom::Point> pts;
  pts.push_back(geom::Point::Zero(n));
  for (int mask = 0; mask < (1 << n); ++mask) {
    geom::Point p(n);
    for (int d = 0; d < n; ++d) p[d] = (mask >> d) & 1 ? 5.0 : -5.0;
    pts.push_back(p);
  }
  auto dt = geom::delaunay(pts);
  Eigen::MatrixXd A(n, n);
  A << 0, 1, 0, 0,
      0, 0, 1, 0,
      0, 0, 0, 1,
      -24, -50, -35, -10;
  model::Partition part;
  part.dimension = n;
  std::vector<geom::VertexId> ids;
  for (const auto& p : pts) ids.push_back(part.vertices.intern(p));
  int next = 0;
  for (const auto& s : dt) {
    model::Cell c;
    c.id = next++;
    c.law = {A, Eigen::VectorXd::Zero(n)};
    for (int i : s.v) c.vertices.push_back(ids[i]);
    c.contains_origin = false;
    for (auto v : c.vertices) c.contains_origin |= geom::is_origin(part.vertices.point(v));
    part.cells.push_back(std::move(c));
  }
  return to_file(part,
                 {{"name", "canonical4d"},
                  {"description",
                   "stable 4-D companion-form linear system on the box |x|_inf <= 5, "
                   "triangulated as a simplex fan around the origin"}});
}

PartitionFile mpc4d_plant_file() {
  PartitionFile f;
  f.dimension = 4;
  f.metadata = {{"name", "mpc4d-plant"},
                {"description",
                 "raw discrete-time 4-D plant matrices; synthesize an explicit-MPC PWA "
                 "partition externally, then convert-discrete and analyze"}};
  f.sampling_time = 0.01;
  f.plant_A = {{0.4346, -0.2313, -0.6404, 0.3405},
               {-0.6731, 0.1045, -0.0613, 0.3400},
               {-0.0568, 0.7065, -0.086, 0.0159},
               {0.3511, 0.1404, 0.2980, 1.0416}};
  f.plant_B = {0.4346, -0.6731, -0.0568, 0.3511};
  return f;
}

}  // namespace

std::vector<PartitionFile> shipped_benchmarks() {
  return {flower_file(), canonical4d_file(), mpc4d_plant_file()};
}

// ---------------------------------------------------------------------------
// Level sets and vector-field grid (2-D export for plotting).
// ---------------------------------------------------------------------------

std::vector<std::array<double, 4>> level_segments_for_cell(
    const model::Partition& part, const model::Cell& cell,
    const model::LyapunovCandidate::Piece& piece, double level) {
  std::vector<std::array<double, 4>> out;
  const auto pts = part.cell_points(cell);
  if (piece.p.norm() <= 1e-14) return out;  // constant piece: no line to draw

  // order the polygon boundary by angle around the centroid
  geom::Point c = geom::Point::Zero(2);
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  std::vector<int> order(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::atan2(pts[a][1] - c[1], pts[a][0] - c[0]) <
           std::atan2(pts[b][1] - c[1], pts[b][0] - c[0]);
  });

  std::vector<geom::Point> hits;
  const int k = static_cast<int>(order.size());
  for (int e = 0; e < k; ++e) {
    const geom::Point& a = pts[order[e]];
    const geom::Point& b = pts[order[(e + 1) % k]];
    const double fa = piece.p.dot(a) + piece.q - level;
    const double fb = piece.p.dot(b) + piece.q - level;
    if ((fa > 0 && fb > 0) || (fa < 0 && fb < 0)) continue;
    if (fa == fb) continue;  // edge lies on the level line; neighbors cover it
    const double t = fa / (fa - fb);
    if (t < -1e-12 || t > 1 + 1e-12) continue;
    geom::Point h = a + t * (b - a);
    bool dup = false;
    for (const auto& q : hits) dup |= (q - h).norm() <= 1e-12;
    if (!dup) hits.push_back(h);
  }
  if (hits.size() >= 2) out.push_back({hits[0][0], hits[0][1], hits[1][0], hits[1][1]});
  return out;
}

void export_levelsets(const model::Partition& part, const model::LyapunovCandidate& cand,
                      const LevelSetOptions& options, const std::string& out_dir) {
  if (part.dimension != 2)
    fail(Errc::dimension_unsupported, "level-set export is 2-D only");

  std::vector<double> levels = options.levels;
  if (levels.empty()) {
    double vmax = 0.0;
    for (std::size_t ci = 0; ci < part.cells.size(); ++ci) {
      for (auto vid : part.cells[ci].vertices) {
        const auto& v = part.vertices.point(vid);
        vmax = std::max(vmax, cand.pieces[ci].p.dot(v) + cand.pieces[ci].q);
      }
    }
    for (int k = 1; k <= 5; ++k) levels.push_back(vmax * k / 6.0);
  }

  std::string csv = "level,cell_id,x1,y1,x2,y2\n";
  char buf[256];
  for (double level : levels) {
    for (std::size_t ci = 0; ci < part.cells.size(); ++ci) {
      for (const auto& s :
           level_segments_for_cell(part, part.cells[ci], cand.pieces[ci], level)) {
        std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,%.17g,%.17g\n", level,
                      part.cells[ci].id, s[0], s[1], s[2], s[3]);
        csv += buf;
      }
    }
  }
  atomic_write(out_dir + "/levelsets.csv", csv);

  // vector-field grid over the domain bounding box
  geom::Point lo = part.vertices.point(0), hi = lo;
  for (int i = 0; i < part.vertices.size(); ++i) {
    lo = lo.cwiseMin(part.vertices.point(i));
    hi = hi.cwiseMax(part.vertices.point(i));
  }
  const int grid = std::max(
      2, static_cast<int>(std::sqrt(options.samples_per_cell * part.cells.size())));
  std::string vf = "x,y,dx,dy,cell_id\n";
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      geom::Point x(2);
      x[0] = lo[0] + (hi[0] - lo[0]) * (i + 0.5) / grid;
      x[1] = lo[1] + (hi[1] - lo[1]) * (j + 0.5) / grid;
      const int ci = model::cell_index_containing(part, x);
      if (ci < 0) continue;
      const geom::Point dx = model::eval_dynamics(part.cells[ci], x);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", x[0], x[1], dx[0], dx[1],
                    part.cells[ci].id);
      vf += buf;
    }
  }
  atomic_write(out_dir + "/vectorfield.csv", vf);
}

void write_records_jsonl(const std::vector<engine::IterationRecord>& records,
                         const std::string& path) {
  std::string out;
  for (const auto& r : records) {
    json j = {{"iteration", r.iteration},     {"cells", r.cell_count},
              {"slack_sum", r.slack_sum},     {"t_opt", r.t_opt},
              {"strategy", refine::to_string(r.strategy)}, {"vertices_added", r.vertices_added}};
    out += j.dump() + "\n";
  }
  atomic_write(path, out);
}

void write_metrics_csv(const std::vector<engine::IterationRecord>& records,
                       const std::string& path) {
  auto rows = engine::metrics(records);
  std::string out = "iteration,t_opt_norm,n_r_norm\n";
  char buf[128];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i + 1, rows[i].t_opt_norm,
                  rows[i].n_r_norm);
    out += buf;
  }
  atomic_write(path, out);
}

}  // namespace pwalyap::io
