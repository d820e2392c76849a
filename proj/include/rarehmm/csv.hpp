#pragma once

#include "rarehmm/entropy.hpp"
#include "rarehmm/experiments.hpp"
#include "rarehmm/reconstruction.hpp"

#include <string>
#include <vector>

namespace rarehmm {

// 12 significant digits, C locale. inf/-inf/nan serialize as such.
std::string format_double(double value);

// Unit scaling for reported log-scale quantities: 1.0 for nats,
// 1/ln(2) applied for bits.
struct ReportUnits {
  bool bits = false;
  double scale() const;
  const char* name() const { return bits ? "bits" : "nats"; }
};

std::string sweep_csv(const std::vector<SweepRow>& rows, ReportUnits units);
std::string estimates_csv(const std::vector<EntropyEstimate>& estimates,
                          ReportUnits units);
std::string bracket_csv(const std::vector<Bracket>& brackets,
                        ReportUnits units);
std::string block_diagnostics_csv(const std::vector<BlockDiagnostic>& blocks,
                                  ReportUnits units);
std::string offset_tail_csv(const OffsetTailHistogram& tail);
std::string paired_decode_csv(const std::vector<PairedDecodeRow>& rows);
std::string event_scaling_csv(const std::vector<EventScalingRow>& rows);

void write_file(const std::string& path, const std::string& contents);

}  // namespace rarehmm
