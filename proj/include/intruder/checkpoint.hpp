// SPDX-License-Identifier: Apache-2.0
//
// Named weight collections and their on-disk format.
//
// A checkpoint saved under prefix P occupies two files:
//   P.manifest.json  {"version": 1,
//                     "tensors": [{"name", "rows", "cols", "offset", "crc32"}, ...],
//                     "metadata": {string: string}}
//   P.bin            row-major little-endian float64 payloads, concatenated in
//                    manifest order; offset is in bytes from the start of P.bin
//                    and each tensor spans rows * cols * 8 bytes.
#pragma once

#include "intruder/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace intruder {

inline constexpr int kCheckpointFormatVersion = 1;

/// Tensors keyed by unique non-empty name, iterated in lexicographic order.
class Checkpoint {
 public:
  using Entries = std::map<std::string, Matrix>;
  using Metadata = std::map<std::string, std::string>;

  Checkpoint() = default;
  explicit Checkpoint(Entries entries, Metadata metadata = {});

  /// Inserts or replaces. Rejects empty names, empty shapes and non-finite data.
  void set(const std::string& name, Matrix m);
  const Matrix& at(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::vector<std::string> names() const;

  const Entries& entries() const noexcept { return entries_; }
  Metadata& metadata() noexcept { return metadata_; }
  const Metadata& metadata() const noexcept { return metadata_; }

  /// Bitwise equality of names, shapes, data and metadata.
  friend bool operator==(const Checkpoint& a, const Checkpoint& b);

 private:
  Entries entries_;
  Metadata metadata_;
};

struct ManifestEntry {
  std::string name;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::uint64_t offset = 0;
  std::uint32_t crc32 = 0;

  std::uint64_t byte_size() const noexcept { return static_cast<std::uint64_t>(rows * cols) * 8u; }
};

struct Manifest {
  int version = kCheckpointFormatVersion;
  std::vector<ManifestEntry> tensors;
  Checkpoint::Metadata metadata;
};

std::filesystem::path manifest_path(const std::filesystem::path& prefix);
std::filesystem::path payload_path(const std::filesystem::path& prefix);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// Writes both files through temporaries renamed into place. Throws StorageError.
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& prefix);

/// Reads and verifies a checkpoint. Throws StorageError (missing/unreadable),
/// VersionError or CorruptionError.
Checkpoint load_checkpoint(const std::filesystem::path& prefix);

/// Parses and structurally validates only the manifest.
Manifest read_manifest(const std::filesystem::path& prefix);

struct CheckpointPair {
  Checkpoint base;
  Checkpoint tuned;
};

/// Returns the pair iff both checkpoints hold the same names with the same shapes.
/// Throws MismatchError listing missing names or naming the first shape mismatch.
CheckpointPair validate_pair(Checkpoint base, Checkpoint tuned);

}  // namespace intruder
