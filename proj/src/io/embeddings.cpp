#include "mtp/io/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

#include "mtp/error.hpp"

namespace mtp::io {

void EmbeddingStore::insert(int frame, int det_index, Eigen::VectorXd v) {
  if (v.size() != dim_) {
    throw DimensionError("embedding at (" + std::to_string(frame) + "," +
                         std::to_string(det_index) + ") has length " + std::to_string(v.size()) +
                         ", store dim is " + std::to_string(dim_));
  }
  const auto [it, inserted] = vectors_.try_emplace({frame, det_index}, std::move(v));
  if (!inserted) {
    throw IntegrityError("duplicate embedding key (" + std::to_string(frame) + "," +
                         std::to_string(det_index) + ")");
  }
}

bool EmbeddingStore::contains(int frame, int det_index) const {
  return vectors_.count({frame, det_index}) > 0;
}

const Eigen::VectorXd& EmbeddingStore::at(int frame, int det_index) const {
  const auto it = vectors_.find({frame, det_index});
  if (it == vectors_.end()) {
    throw IntegrityError("no embedding for (" + std::to_string(frame) + "," +
                         std::to_string(det_index) + ")");
  }
  return it->second;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    std::string_view f = line.substr(start, pos == std::string_view::npos ? pos : pos - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    out.push_back(f);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "cannot parse number from '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

EmbeddingStore load_embeddings(std::istream& in) {
  std::string raw;
  std::size_t line = 0;
  int dim = -1;
  while (dim < 0 && std::getline(in, raw)) {
    ++line;
    std::string_view text(raw);
    while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.remove_suffix(1);
    if (text.empty()) continue;
    if (text.substr(0, 4) != "dim=") throw ParseError(line, "missing 'dim=D' header");
    dim = parse_number<int>(text.substr(4), line);
    if (dim < 1) throw ParseError(line, "dim must be >= 1");
  }
  if (dim < 0) throw ParseError(0, "missing 'dim=D' header");

  EmbeddingStore store(dim);
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text(raw);
    while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.remove_suffix(1);
    if (text.empty()) continue;
    const auto f = split(text);
    if (f.size() != static_cast<std::size_t>(dim) + 2) {
      throw ParseError(line, "expected " + std::to_string(dim) + " values, got " +
                                 std::to_string(f.size() < 2 ? 0 : f.size() - 2));
    }
    const int frame = parse_number<int>(f[0], line);
    const int idx = parse_number<int>(f[1], line);
    Eigen::VectorXd v(dim);
    for (int k = 0; k < dim; ++k) {
      v(k) = parse_number<double>(f[static_cast<std::size_t>(k) + 2], line);
      if (!std::isfinite(v(k))) throw ParseError(line, "non-finite embedding value");
    }
    if (store.contains(frame, idx)) {
      throw IntegrityError("line " + std::to_string(line) + ": duplicate embedding key (" +
                           std::to_string(frame) + "," + std::to_string(idx) + ")");
    }
    store.insert(frame, idx, std::move(v));
  }
  return store;
}

EmbeddingStore load_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return load_embeddings(in);
}

void write_embeddings(std::ostream& out, const EmbeddingStore& store) {
  out << "dim=" << store.dim() << '\n';
  for (const auto& [key, v] : store.entries()) {
    out << key.first << ',' << key.second;
    for (Eigen::Index k = 0; k < v.size(); ++k) out << ',' << format_double(v(k));
    out << '\n';
  }
}

void write_embeddings_file(const std::string& path, const EmbeddingStore& store) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_embeddings(out, store);
}

void validate_coverage(const EmbeddingStore& store, std::span<const MotRecord> detections) {
  for (const auto& [frame, rows] : group_by_frame(detections)) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (!store.contains(frame, static_cast<int>(k))) {
        throw IntegrityError("detection " + std::to_string(k) + " of frame " +
                             std::to_string(frame) + " has no embedding");
      }
    }
  }
}

}  // namespace mtp::io
