#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mtp/io/mot.hpp"
#include "mtp/metrics/clear_mot.hpp"

namespace mtp::metrics {

struct SequenceMetrics {
  std::string name;
  ClearMot clear;
  IdScores identity;
};

/// Totals over all sequences plus the per-sequence rows. Totals are computed
/// from summed counts, not averaged scores.
struct EvalReport {
  SequenceMetrics total;
  std::vector<SequenceMetrics> sequences;
};

SequenceMetrics evaluate_sequence(const std::string& name, std::span<const io::MotRecord> gt,
                                  std::span<const io::MotRecord> pred);

EvalReport combine(std::vector<SequenceMetrics> sequences);

/// Column order: MOTA, IDF1, IDS, MT, ML, Frag, then FP, FN, IDP, IDR.
void write_csv(std::ostream& out, const EvalReport& report);
std::string format_table(const EvalReport& report);
/// Aligned table of arbitrary rows, same columns as format_table.
std::string format_rows(std::span<const SequenceMetrics> rows);

}  // namespace mtp::metrics
