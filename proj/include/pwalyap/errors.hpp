#ifndef PWALYAP_ERRORS_HPP
#define PWALYAP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pwalyap {

enum class Errc {
  // geometry
  degenerate_cell,
  no_eligible_edge,
  degenerate_point_set,
  vertex_outside_cell,
  // model
  nonpositive_sampling_time,
  origin_outside_domain,
  start_outside_domain,
  // lp
  invalid_partition,
  malformed_program,
  not_optimal,
  // refinement
  bad_weights,
  no_slack_cells,
  degenerate_crossing,
  zero_vector_field,
  point_off_boundary,
  // engine
  empty_records,
  certificate_violation,
  // io
  dimension_unsupported,
  io_error,
  parse_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::degenerate_cell: return "DegenerateCell";
    case Errc::no_eligible_edge: return "NoEligibleEdge";
    case Errc::degenerate_point_set: return "DegeneratePointSet";
    case Errc::vertex_outside_cell: return "VertexOutsideCell";
    case Errc::nonpositive_sampling_time: return "NonpositiveSamplingTime";
    case Errc::origin_outside_domain: return "OriginOutsideDomain";
    case Errc::start_outside_domain: return "StartOutsideDomain";
    case Errc::invalid_partition: return "InvalidPartition";
    case Errc::malformed_program: return "MalformedProgram";
    case Errc::not_optimal: return "NotOptimal";
    case Errc::bad_weights: return "BadWeights";
    case Errc::no_slack_cells: return "NoSlackCells";
    case Errc::degenerate_crossing: return "DegenerateCrossing";
    case Errc::zero_vector_field: return "ZeroVectorField";
    case Errc::point_off_boundary: return "PointOffBoundary";
    case Errc::empty_records: return "EmptyRecords";
    case Errc::certificate_violation: return "CertificateViolation";
    case Errc::dimension_unsupported: return "DimensionUnsupported";
    case Errc::io_error: return "IoError";
    case Errc::parse_error: return "ParseError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace pwalyap

#endif
