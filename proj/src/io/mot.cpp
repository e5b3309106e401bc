#include "mtp/io/mot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string_view>

#include "mtp/error.hpp"

namespace mtp::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view field, std::size_t line, const char* what) {
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(line, std::string("cannot parse ") + what + " from '" + std::string(field) + "'");
  }
  return v;
}

int to_int(std::string_view field, std::size_t line, const char* what) {
  const double v = to_double(field, line, what);
  if (v != std::floor(v) || std::abs(v) > 2e9) {
    throw ParseError(line, std::string(what) + " must be an integer, got '" + std::string(field) + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf, ptr);
}

std::vector<MotRecord> parse_mot(std::istream& in) {
  std::vector<MotRecord> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty()) continue;
    const auto f = split(text);
    if (f.size() < 7) {
      throw ParseError(line, "expected at least 7 fields, got " + std::to_string(f.size()));
    }
    MotRecord r;
    r.frame = to_int(f[0], line, "frame");
    r.id = to_int(f[1], line, "id");
    r.bb_left = to_double(f[2], line, "bb_left");
    r.bb_top = to_double(f[3], line, "bb_top");
    r.bb_width = to_double(f[4], line, "bb_width");
    r.bb_height = to_double(f[5], line, "bb_height");
    r.conf = to_double(f[6], line, "conf");
    if (f.size() > 7) r.x = to_double(f[7], line, "x");
    if (f.size() > 8) r.y = to_double(f[8], line, "y");
    if (f.size() > 9) r.z = to_double(f[9], line, "z");
    if (r.frame < 1) throw ParseError(line, "frame must be >= 1");
    if (!(r.bb_width > 0.0) || !(r.bb_height > 0.0)) {
      throw ParseError(line, "box width and height must be positive");
    }
    out.push_back(r);
  }
  return out;
}

std::vector<MotRecord> read_mot_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_mot(in);
}

void write_mot(std::ostream& out, std::span<const MotRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].frame != records[b].frame) return records[a].frame < records[b].frame;
    return records[a].id < records[b].id;
  });
  for (std::size_t k : order) {
    const MotRecord& r = records[k];
    out << r.frame << ',' << r.id << ',' << format_double(r.bb_left) << ','
        << format_double(r.bb_top) << ',' << format_double(r.bb_width) << ','
        << format_double(r.bb_height) << ',' << format_double(r.conf) << ','
        << format_double(r.x) << ',' << format_double(r.y) << ',' << format_double(r.z) << '\n';
  }
}

void write_mot_file(const std::string& path, std::span<const MotRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_mot(out, records);
}

std::map<int, std::vector<MotRecord>> group_by_frame(std::span<const MotRecord> records) {
  std::map<int, std::vector<MotRecord>> out;
  for (const auto& r : records) out[r.frame].push_back(r);
  return out;
}

}  // namespace mtp::io
