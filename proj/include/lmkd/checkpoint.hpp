#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmkd/model.hpp"
#include "lmkd/tensor.hpp"

namespace lmkd {

// Binary layout, all integers little-endian:
//   "LMKD" u32 version  u32 precision bits
//   u64 n + n bytes  network spec text
//   u64 n + n bytes  metadata JSON
//   u32 count, then per tensor: u32 rank, rank × u64 dims, raw values   (parameters)
//   u32 count, then the same for buffers (running mean / var)
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct StoredTensor {
  Shape shape;
  std::vector<double> values;  // exact for both precisions

  bool operator==(const StoredTensor&) const = default;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  Precision precision = Precision::F32;
  NetworkSpec spec;
  std::string metadata = "{}";
  std::vector<StoredTensor> params;
  std::vector<StoredTensor> buffers;

  std::uint64_t param_elements() const;
  bool operator==(const Checkpoint&) const = default;
};

std::string serialize(const Checkpoint& ckpt);
Checkpoint deserialize(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
/// Raw file contents, for byte-level comparisons.
std::string read_file_bytes(const std::string& path);

template <typename T>
Checkpoint make_checkpoint(const Network<T>& net, std::string metadata = "{}");

/// Rebuilds a network; values are converted when the checkpoint precision
/// differs from T.
template <typename T>
Network<T> network_from(const Checkpoint& ckpt);

}  // namespace lmkd
