#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>

#include "mtp/io/mot.hpp"

namespace mtp::io {

/// Appearance embeddings keyed by (frame, detection index within the frame).
///
/// Text format: a header line `dim=D`, then one line per detection:
/// `frame,det_index,e_0,...,e_{D-1}`. Values are written as shortest
/// round-trip decimals, so a load/write cycle is bit-exact.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(int dim = 0) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

  /// Throws IntegrityError on a duplicate key, DimensionError on a wrong length.
  void insert(int frame, int det_index, Eigen::VectorXd v);
  bool contains(int frame, int det_index) const;
  /// Throws IntegrityError when the key is absent.
  const Eigen::VectorXd& at(int frame, int det_index) const;

  const std::map<std::pair<int, int>, Eigen::VectorXd>& entries() const { return vectors_; }

 private:
  int dim_;
  std::map<std::pair<int, int>, Eigen::VectorXd> vectors_;
};

EmbeddingStore load_embeddings(std::istream& in);
EmbeddingStore load_embeddings_file(const std::string& path);
void write_embeddings(std::ostream& out, const EmbeddingStore& store);
void write_embeddings_file(const std::string& path, const EmbeddingStore& store);

/// Throws IntegrityError unless every detection row has an embedding.
void validate_coverage(const EmbeddingStore& store, std::span<const MotRecord> detections);

}  // namespace mtp::io
