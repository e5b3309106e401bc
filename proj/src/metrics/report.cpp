#include "mtp/metrics/report.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

namespace mtp::metrics {

SequenceMetrics evaluate_sequence(const std::string& name, std::span<const io::MotRecord> gt,
                                  std::span<const io::MotRecord> pred) {
  return {name, clear_mot(gt, pred), idf1(gt, pred)};
}

EvalReport combine(std::vector<SequenceMetrics> sequences) {
  EvalReport r;
  r.total.name = "OVERALL";
  ClearMot& c = r.total.clear;
  IdScores& s = r.total.identity;
  double iou_sum = 0.0;
  for (const auto& q : sequences) {
    c.num_gt += q.clear.num_gt;
    c.num_pred += q.clear.num_pred;
    c.tp += q.clear.tp;
    c.fp += q.clear.fp;
    c.fn += q.clear.fn;
    c.idsw += q.clear.idsw;
    c.frag += q.clear.frag;
    c.num_tracks += q.clear.num_tracks;
    c.mt += q.clear.mt;
    c.pt += q.clear.pt;
    c.ml += q.clear.ml;
    iou_sum += q.clear.motp * static_cast<double>(q.clear.tp);
    s.idtp += q.identity.idtp;
    s.idfp += q.identity.idfp;
    s.idfn += q.identity.idfn;
  }
  c.motp = c.tp > 0 ? iou_sum / static_cast<double>(c.tp) : 0.0;
  c.finalize();
  s.finalize();
  r.sequences = std::move(sequences);
  return r;
}

namespace {

struct Row {
  std::string name;
  std::vector<std::string> cells;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Row make_row(const SequenceMetrics& m) {
  const auto& c = m.clear;
  const auto& s = m.identity;
  return {m.name,
          {fixed(100.0 * c.mota, 1), fixed(100.0 * s.idf1, 1), std::to_string(c.idsw),
           std::to_string(c.mt), std::to_string(c.ml), std::to_string(c.frag), std::to_string(c.fp),
           std::to_string(c.fn), fixed(100.0 * s.idp, 1), fixed(100.0 * s.idr, 1)}};
}

const std::vector<std::string> kColumns = {"MOTA", "IDF1", "IDS", "MT", "ML",
                                           "Frag", "FP",   "FN",  "IDP", "IDR"};

}  // namespace

void write_csv(std::ostream& out, const EvalReport& report) {
  out << "sequence";
  for (const auto& c : kColumns) out << ',' << c;
  out << '\n';
  const auto emit = [&](const SequenceMetrics& m) {
    const auto& c = m.clear;
    const auto& s = m.identity;
    out << m.name << ',' << io::format_double(c.mota) << ',' << io::format_double(s.idf1) << ','
        << c.idsw << ',' << c.mt << ',' << c.ml << ',' << c.frag << ',' << c.fp << ',' << c.fn
        << ',' << io::format_double(s.idp) << ',' << io::format_double(s.idr) << '\n';
  };
  for (const auto& q : report.sequences) emit(q);
  emit(report.total);
}

std::string format_table(const EvalReport& report) {
  std::vector<SequenceMetrics> rows = report.sequences;
  rows.push_back(report.total);
  return format_rows(rows);
}

std::string format_rows(std::span<const SequenceMetrics> metrics_rows) {
  std::vector<Row> rows;
  for (const auto& q : metrics_rows) rows.push_back(make_row(q));

  std::size_t name_w = 8;
  std::vector<std::size_t> w(kColumns.size());
  for (std::size_t k = 0; k < kColumns.size(); ++k) w[k] = kColumns[k].size();
  for (const auto& r : rows) {
    name_w = std::max(name_w, r.name.size());
    for (std::size_t k = 0; k < r.cells.size(); ++k) w[k] = std::max(w[k], r.cells[k].size());
  }

  std::ostringstream os;
  const auto pad_left = [&](const std::string& s, std::size_t width) {
    os << std::string(width - s.size(), ' ') << s;
  };
  os << "sequence" << std::string(name_w - 8, ' ');
  for (std::size_t k = 0; k < kColumns.size(); ++k) {
    os << "  ";
    pad_left(kColumns[k], w[k]);
  }
  os << '\n';
  for (const auto& r : rows) {
    os << r.name << std::string(name_w - r.name.size(), ' ');
    for (std::size_t k = 0; k < r.cells.size(); ++k) {
      os << "  ";
      pad_left(r.cells[k], w[k]);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace mtp::metrics
