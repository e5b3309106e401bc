#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mtp/box.hpp"

namespace mtp::io {

/// One row of a MOTChallenge CSV file. `id` is -1 for raw detections.
struct MotRecord {
  int frame = 1;
  int id = -1;
  double bb_left = 0.0;
  double bb_top = 0.0;
  double bb_width = 0.0;
  double bb_height = 0.0;
  double conf = 1.0;
  double x = -1.0;
  double y = -1.0;
  double z = -1.0;

  Box box() const { return {bb_left, bb_top, bb_width, bb_height}; }
  friend bool operator==(const MotRecord&, const MotRecord&) = default;
};

/// Shortest decimal that parses back to exactly `v`.
std::string format_double(double v);

/// Parses comma-separated rows with at least 7 fields (frame, id, left, top,
/// width, height, conf[, x, y, z]). Blank lines are skipped. Throws ParseError
/// carrying the 1-based line number on any malformed row.
std::vector<MotRecord> parse_mot(std::istream& in);
std::vector<MotRecord> read_mot_file(const std::string& path);

/// Writes all ten columns, rows ordered by (frame, id); ties keep input order.
void write_mot(std::ostream& out, std::span<const MotRecord> records);
void write_mot_file(const std::string& path, std::span<const MotRecord> records);

/// Records grouped by frame, each group in file order. The position within a
/// group is the detection index used by embedding files.
std::map<int, std::vector<MotRecord>> group_by_frame(std::span<const MotRecord> records);

}  // namespace mtp::io
