#ifndef PWALYAP_ENGINE_HPP
#define PWALYAP_ENGINE_HPP

#include <cstdint>
#include <functional>

#include "pwalyap/lyapunov.hpp"
#include "pwalyap/refine.hpp"

namespace pwalyap::engine {

struct IterationRecord {
  int iteration = 0;   // 1-based
  int cell_count = 0;  // n_r of the partition the LP was solved on
  double slack_sum = 0.0;
  double t_opt = 0.0;  // LP solve wall seconds
  refine::Strategy strategy = refine::Strategy::Naive;
  int vertices_added = 0;  // buffered vertices applied after this solve
};

enum class AnalysisStatus { Valid, TimedOut };
const char* to_string(AnalysisStatus s);

struct AnalysisResult {
  AnalysisStatus status = AnalysisStatus::TimedOut;
  model::LyapunovCandidate candidate;
  model::Partition partition;
  std::vector<IterationRecord> records;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Solve - check slacks - refine - repeat, until every slack is below the
/// zero tolerance or the wall clock passes config.timeout_seconds (checked at
/// iteration boundaries; the LP also receives the remaining budget). A Valid
/// result has already passed verify_certificate.
AnalysisResult analyze(const model::Partition& partition, refine::Strategy strategy,
                       const lyap::SearchConfig& config,
                       const IterationCallback& on_iteration = {});

struct MetricsRow {
  double t_opt_norm;  // accumulated solve time / total solve time
  double n_r_norm;    // cell count / summed cell counts
};

/// Normalized accumulative optimization time and normalized region counts.
std::vector<MetricsRow> metrics(const std::vector<IterationRecord>& records);

struct VerifyReport {
  struct Item {
    std::string what;
    int cell_id = -1;
    double residual = 0.0;
  };
  std::vector<Item> violations;
  int vertex_checks = 0;
  int samples = 0;
  bool passed() const { return violations.empty(); }
};

/// Independent recheck of the certificate: decrease/positivity at every
/// vertex, continuity at every shared vertex pair, plus a seeded random
/// interior sampling audit of V > 0 and Vdot < 0.
VerifyReport verify_certificate(const model::Partition& partition,
                                const model::LyapunovCandidate& candidate,
                                const lyap::SearchConfig& config, std::uint64_t seed = 0x5eed,
                                int samples = 1000);

}  // namespace pwalyap::engine

#endif
