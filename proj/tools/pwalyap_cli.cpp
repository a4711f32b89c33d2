// Command-line front end: validate / ensure-origin / convert-discrete /
// analyze / levelsets / compare over JSON partition files.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pwalyap/engine.hpp"
#include "pwalyap/io.hpp"

using namespace pwalyap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNotCertified = 2;

struct CommonOpts {
  double eps1 = 1e-4;
  double eps2 = 1e-4;
  double tolerance = 1e-8;
  double timeout = 3600.0;
  std::uint64_t seed = 0x5eed;
  std::string output_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--eps1", o.eps1, "strict-decrease margin");
  cmd->add_option("--eps2", o.eps2, "positivity margin");
  cmd->add_option("--tolerance", o.tolerance, "zero tolerance for slacks and residuals");
  cmd->add_option("--timeout", o.timeout, "wall-clock budget in seconds");
  cmd->add_option("--seed", o.seed, "seed for the certificate sampling audit");
  cmd->add_option("--output-dir", o.output_dir, "directory for result files");
}

lyap::SearchConfig to_config(const CommonOpts& o) {
  lyap::SearchConfig c;
  c.eps1 = o.eps1;
  c.eps2 = o.eps2;
  c.zero_tolerance = o.tolerance;
  c.timeout_seconds = o.timeout;
  return c;
}

void print_violations(const std::vector<model::Violation>& vs) {
  for (const auto& v : vs) {
    std::string cells;
    for (int id : v.cells) cells += (cells.empty() ? "" : ",") + std::to_string(id);
    std::fprintf(stderr, "[%s] %s: %s (cells %s, residual %.3g)\n",
                 v.severity == model::Severity::Error ? "error" : "warn",
                 model::to_string(v.kind), v.message.c_str(), cells.c_str(), v.residual);
  }
}

struct RunOutput {
  engine::AnalysisResult result;
  double wall_seconds = 0.0;
};

RunOutput run_analysis(const model::Partition& input, refine::Strategy strategy,
                       const lyap::SearchConfig& config, bool stream_records) {
  model::Partition part = model::ensure_origin_vertex(input);
  if (part.cells.size() != input.cells.size())
    std::fprintf(stderr, "note: origin promoted to a vertex (%zu -> %zu cells)\n",
                 input.cells.size(), part.cells.size());
  const auto t0 = std::chrono::steady_clock::now();
  RunOutput out;
  out.result = engine::analyze(part, strategy, config,
                               [&](const engine::IterationRecord& r) {
                                 if (!stream_records) return;
                                 std::printf("{\"iteration\":%d,\"cells\":%d,\"slack_sum\":%.17g,"
                                             "\"t_opt\":%.6f,\"strategy\":\"%s\","
                                             "\"vertices_added\":%d}\n",
                                             r.iteration, r.cell_count, r.slack_sum, r.t_opt,
                                             refine::to_string(r.strategy), r.vertices_added);
                                 std::fflush(stdout);
                               });
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void write_outputs(const RunOutput& run, refine::Strategy strategy,
                   const lyap::SearchConfig& config, const std::string& dir,
                   bool export_lp) {
  std::filesystem::create_directories(dir);
  io::save_partition_file(io::to_file(run.result.partition, {{"name", "final-partition"}}),
                          dir + "/final_partition.json");
  io::save_certificate_file(io::make_certificate(run.result, config, strategy),
                            dir + "/certificate.json");
  io::write_records_jsonl(run.result.records, dir + "/records.jsonl");
  io::write_metrics_csv(run.result.records, dir + "/metrics.csv");
  if (export_lp) {
    auto prog = lyap::build_lp(run.result.partition, config);
    std::ofstream os(dir + "/lp_final.lp");
    lp::write_lp_format(prog, os);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous PWA Lyapunov function search over polytopic partitions"};
  app.require_subcommand(1);

  std::string in_path, cert_path, out_path;
  std::string strategy_name = "vector-field";
  CommonOpts opts;
  double ts = 0.01;
  bool export_lp = false;
  std::vector<double> levels;
  int samples_per_cell = 16;

  auto* validate = app.add_subcommand("validate", "check partition well-formedness");
  validate->add_option("partition", in_path)->required();

  auto* ensure = app.add_subcommand("ensure-origin",
                                    "re-triangulate cells so the origin is a vertex");
  ensure->add_option("partition", in_path)->required();
  ensure->add_option("--output", out_path, "output partition path")->required();

  auto* convert = app.add_subcommand("convert-discrete",
                                     "invert the forward-Euler map on every cell law");
  convert->add_option("partition", in_path)->required();
  convert->add_option("--ts", ts, "sampling time (seconds)");
  convert->add_option("--output", out_path, "output partition path")->required();

  auto* analyze = app.add_subcommand("analyze", "search for a PWA Lyapunov function");
  analyze->add_option("partition", in_path)->required();
  analyze->add_option("--strategy", strategy_name, "naive | lyapunov | vector-field");
  analyze->add_flag("--export-lp", export_lp, "also write the final LP in text form");
  add_common(analyze, opts);

  auto* levelsets = app.add_subcommand("levelsets",
                                       "export level-set polylines and a field grid (2-D)");
  levelsets->add_option("partition", in_path)->required();
  levelsets->add_option("certificate", cert_path)->required();
  levelsets->add_option("--levels", levels, "level values")->delimiter(',');
  levelsets->add_option("--samples-per-cell", samples_per_cell);
  levelsets->add_option("--output-dir", opts.output_dir);

  auto* compare = app.add_subcommand("compare", "run all three strategies and summarize");
  compare->add_option("partition", in_path)->required();
  add_common(compare, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      auto part = io::to_partition(io::load_partition_file(in_path));
      auto vs = model::validate_partition(part);
      print_violations(vs);
      if (model::has_errors(vs)) {
        std::printf("invalid: %zu violation(s)\n", vs.size());
        return kExitNotCertified;
      }
      std::printf("ok: %zu cells, %d vertices%s\n", part.cells.size(), part.vertices.size(),
                  vs.empty() ? "" : " (warnings above)");
      return kExitOk;
    }

    if (ensure->parsed()) {
      auto file = io::load_partition_file(in_path);
      auto part = model::ensure_origin_vertex(io::to_partition(file));
      auto out = io::to_file(part, file.metadata);
      io::save_partition_file(out, out_path);
      std::printf("wrote %s (%zu cells)\n", out_path.c_str(), part.cells.size());
      return kExitOk;
    }

    if (convert->parsed()) {
      auto file = io::load_partition_file(in_path);
      auto part = io::to_partition(file);
      for (auto& cell : part.cells) cell.law = model::discrete_to_continuous(cell.law, ts);
      auto meta = file.metadata;
      meta["converted"] = "discrete-to-continuous, ts=" + std::to_string(ts);
      auto out = io::to_file(part, meta);
      io::save_partition_file(out, out_path);
      std::printf("wrote %s\n", out_path.c_str());
      return kExitOk;
    }

    if (analyze->parsed()) {
      auto part = io::to_partition(io::load_partition_file(in_path));
      auto vs = model::validate_partition(part);
      print_violations(vs);
      if (model::has_errors(vs)) return kExitInputError;
      const auto strategy = refine::strategy_from_name(strategy_name);
      const auto config = to_config(opts);
      auto run = run_analysis(part, strategy, config, /*stream_records=*/true);
      write_outputs(run, strategy, config, opts.output_dir, export_lp);
      if (run.result.status != engine::AnalysisStatus::Valid) {
        std::printf("timed-out after %zu iterations (%zu cells, %.1fs)\n",
                    run.result.records.size(), run.result.partition.cells.size(),
                    run.wall_seconds);
        return kExitNotCertified;
      }
      auto audit = engine::verify_certificate(run.result.partition, run.result.candidate,
                                              config, opts.seed);
      std::printf("valid: %zu cells, %zu iterations, %.2fs; recheck %s (%d vertex checks, "
                  "%d samples)\n",
                  run.result.partition.cells.size(), run.result.records.size(),
                  run.wall_seconds, audit.passed() ? "passed" : "FAILED", audit.vertex_checks,
                  audit.samples);
      return audit.passed() ? kExitOk : kExitNotCertified;
    }

    if (levelsets->parsed()) {
      auto part = io::to_partition(io::load_partition_file(in_path));
      auto cert = io::load_certificate_file(cert_path);
      model::LyapunovCandidate cand;
      for (std::size_t ci = 0; ci < part.cells.size(); ++ci) {
        const model::Cell& cell = part.cells[ci];
        const io::CertificateFile::CellEntry* entry = nullptr;
        for (const auto& e : cert.cells) {
          if (e.id == cell.id) entry = &e;
        }
        if (!entry)
          fail(Errc::parse_error,
               "certificate has no entry for cell " + std::to_string(cell.id));
        model::LyapunovCandidate::Piece piece;
        piece.cell_id = cell.id;
        piece.p = Eigen::Map<const Eigen::VectorXd>(entry->p.data(), entry->p.size());
        piece.q = entry->q;
        piece.tau = entry->tau;
        cand.pieces.push_back(std::move(piece));
      }
      io::LevelSetOptions lso;
      lso.levels = levels;
      lso.samples_per_cell = samples_per_cell;
      std::filesystem::create_directories(opts.output_dir);
      io::export_levelsets(part, cand, lso, opts.output_dir);
      std::printf("wrote %s/levelsets.csv and %s/vectorfield.csv\n", opts.output_dir.c_str(),
                  opts.output_dir.c_str());
      return kExitOk;
    }

    if (compare->parsed()) {
      auto part = io::to_partition(io::load_partition_file(in_path));
      auto vs = model::validate_partition(part);
      print_violations(vs);
      if (model::has_errors(vs)) return kExitInputError;
      const auto config = to_config(opts);
      std::filesystem::create_directories(opts.output_dir);
      std::string summary = "strategy,status,iterations,cells,t_opt_total,wall_seconds\n";
      bool all_valid = true;
      std::printf("%-14s %-10s %10s %8s %12s %10s\n", "strategy", "status", "iterations",
                  "cells", "t_opt_total", "wall_s");
      for (auto strategy : {refine::Strategy::Naive, refine::Strategy::LyapunovBased,
                            refine::Strategy::VectorField}) {
        auto run = run_analysis(part, strategy, config, /*stream_records=*/false);
        const auto& res = run.result;
        double t_total = 0.0;
        for (const auto& r : res.records) t_total += r.t_opt;
        write_outputs(run, strategy, config,
                      opts.output_dir + "/" + refine::to_string(strategy), false);
        char line[256];
        std::snprintf(line, sizeof line, "%s,%s,%zu,%zu,%.6f,%.6f\n",
                      refine::to_string(strategy), engine::to_string(res.status),
                      res.records.size(), res.partition.cells.size(), t_total,
                      run.wall_seconds);
        summary += line;
        std::printf("%-14s %-10s %10zu %8zu %12.3f %10.2f\n", refine::to_string(strategy),
                    engine::to_string(res.status), res.records.size(),
                    res.partition.cells.size(), t_total, run.wall_seconds);
        all_valid &= res.status == engine::AnalysisStatus::Valid;
      }
      std::ofstream os(opts.output_dir + "/summary.csv");
      os << summary;
      return all_valid ? kExitOk : kExitNotCertified;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInputError;
  }
  return kExitInputError;
}
