#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtp/nn/tensor.hpp"

namespace mtp::nn {

/// Parameter checkpoint: named tensors plus the model configuration they were
/// built for. Byte layout (all integers and floats little-endian):
///
///   8 bytes  magic "MTPCKPT\0"
///   u32      format version (currently 1)
///   u64      config fingerprint (FNV-1a 64 of config_json)
///   u32      config length, then that many bytes of JSON
///   u32      tensor count
///   per tensor:
///     u32 name length, name bytes
///     u32 rank, rank x u64 dims
///     prod(dims) x f64 values, column-major (first index fastest)
struct Checkpoint {
  std::string config_json;
  std::vector<std::pair<std::string, Tensor>> tensors;

  std::uint64_t fingerprint() const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
/// Throws ParseError on a bad magic, unknown version, truncated stream, or a
/// fingerprint that does not match the embedded config.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Snapshot of a parameter collection in checkpoint form.
template <TensorCollection P>
std::vector<std::pair<std::string, Tensor>> to_tensors(P& params) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& v : params.views()) {
    out.emplace_back(v.name, Tensor{v.shape, {v.data.begin(), v.data.end()}});
  }
  return out;
}

/// Copies checkpoint tensors into `params`, matched by name and shape.
template <TensorCollection P>
void from_tensors(const std::vector<std::pair<std::string, Tensor>>& tensors, P& params) {
  auto views = params.views();
  if (views.size() != tensors.size()) {
    throw IntegrityError("checkpoint holds " + std::to_string(tensors.size()) +
                         " tensors, model expects " + std::to_string(views.size()));
  }
  for (std::size_t k = 0; k < views.size(); ++k) {
    const auto& [name, t] = tensors[k];
    if (name != views[k].name || t.shape != views[k].shape) {
      throw IntegrityError("checkpoint tensor '" + name + "' does not match model tensor '" +
                           views[k].name + "'");
    }
    std::copy(t.data.begin(), t.data.end(), views[k].data.begin());
  }
}

}  // namespace mtp::nn
