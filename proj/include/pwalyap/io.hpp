#ifndef PWALYAP_IO_HPP
#define PWALYAP_IO_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pwalyap/engine.hpp"

namespace pwalyap::io {

/// On-disk form of a partition: vertices by index so shared vertices stay
/// shared, one affine law per cell, free-form metadata.
struct PartitionFile {
  int dimension = 0;
  std::vector<std::vector<double>> vertices;
  struct CellData {
    int id = -1;
    std::vector<int> vertices;
    std::vector<std::vector<double>> A;  // row-major n x n
    std::vector<double> a;
  };
  std::vector<CellData> cells;
  std::map<std::string, std::string> metadata;          // name, source, notes...
  std::optional<double> sampling_time;                  // set on discrete-time files
  std::vector<std::vector<double>> plant_A;             // raw plant data, when shipped
  std::vector<double> plant_B;
};

struct CertificateFile {
  std::string status;    // "valid" | "timed-out"
  std::string strategy;  // naive | lyapunov | vector-field
  lyap::SearchConfig config;
  struct CellEntry {
    int id = -1;
    std::vector<double> p;
    double q = 0.0;
    double tau = 0.0;
  };
  std::vector<CellEntry> cells;
  std::vector<engine::IterationRecord> iterations;
};

PartitionFile to_file(const model::Partition& partition,
                      std::map<std::string, std::string> metadata = {});

/// Builds the in-memory partition; structural problems (bad indices, shape
/// mismatches) throw ParseError, semantic violations are the caller's to
/// check via validate_partition.
model::Partition to_partition(const PartitionFile& file);

PartitionFile load_partition_file(const std::string& path);
void save_partition_file(const PartitionFile& file, const std::string& path);

CertificateFile make_certificate(const engine::AnalysisResult& result,
                                 const lyap::SearchConfig& config, refine::Strategy strategy);
CertificateFile load_certificate_file(const std::string& path);
void save_certificate_file(const CertificateFile& file, const std::string& path);

/// Bundled example systems: the 2-D four-cone spiral system ("flower"), the
/// 4-D companion-form system ("canonical4d"), and the raw discrete-time 4-D
/// plant matrices ("mpc4d-plant", no cells; an externally synthesized PWA
/// controller partition is required to analyze it).
std::vector<PartitionFile> shipped_benchmarks();

struct LevelSetOptions {
  std::vector<double> levels;   // empty: 5 evenly spaced below the boundary max
  int samples_per_cell = 16;    // density of the vector-field grid
};

/// 2-D only: writes `levelsets.csv` (level,cell_id,x1,y1,x2,y2) and
/// `vectorfield.csv` (x,y,dx,dy,cell_id) under out_dir.
void export_levelsets(const model::Partition& partition,
                      const model::LyapunovCandidate& candidate,
                      const LevelSetOptions& options, const std::string& out_dir);

/// Exact level-line segments of one affine piece clipped to its cell.
std::vector<std::array<double, 4>> level_segments_for_cell(
    const model::Partition& partition, const model::Cell& cell,
    const model::LyapunovCandidate::Piece& piece, double level);

void write_records_jsonl(const std::vector<engine::IterationRecord>& records,
                         const std::string& path);
void write_metrics_csv(const std::vector<engine::IterationRecord>& records,
                       const std::string& path);

}  // namespace pwalyap::io

#endif
