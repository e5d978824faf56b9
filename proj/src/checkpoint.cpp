// SPDX-License-Identifier: Apache-2.0
#include "intruder/checkpoint.hpp"

#include "intruder/error.hpp"
#include "intruder/io.hpp"

#include "json.hpp"
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace intruder {

Checkpoint::Checkpoint(Entries entries, Metadata metadata) : metadata_(std::move(metadata)) {
  for (auto& [name, m] : entries) {
    set(name, std::move(m));
  }
}

void Checkpoint::set(const std::string& name, Matrix m) {
  if (name.empty()) {
    throw InvalidInput("checkpoint tensor name must be non-empty");
  }
  if (m.rows() <= 0 || m.cols() <= 0) {
    throw InvalidInput("checkpoint tensor '" + name + "' must have positive dimensions");
  }
  require_finite(m, "checkpoint tensor '" + name + "'");
  entries_.insert_or_assign(name, std::move(m));
}

const Matrix& Checkpoint::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw MismatchError("checkpoint has no tensor named '" + name + "'");
  }
  return it->second;
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) {
    out.push_back(name);
  }
  return out;
}

bool operator==(const Checkpoint& a, const Checkpoint& b) {
  if (a.metadata_ != b.metadata_ || a.entries_.size() != b.entries_.size()) {
    return false;
  }
  auto ib = b.entries_.begin();
  for (const auto& [name, m] : a.entries_) {
    const auto& [bname, bm] = *ib++;
    if (name != bname || m.rows() != bm.rows() || m.cols() != bm.cols()) {
      return false;
    }
    if (std::memcmp(m.data(), bm.data(), static_cast<std::size_t>(m.size()) * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

fs::path manifest_path(const fs::path& prefix) {
  fs::path p = prefix;
  p += ".manifest.json";
  return p;
}

fs::path payload_path(const fs::path& prefix) {
  fs::path p = prefix;
  p += ".bin";
  return p;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = ::crc32(crc, bytes.data() + pos, static_cast<uInt>(chunk));
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

void append_le(std::vector<std::uint8_t>& out, const Matrix& m) {
  const std::size_t start = out.size();
  out.resize(start + static_cast<std::size_t>(m.size()) * 8);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(m.data()[i]);
    for (int b = 0; b < 8; ++b) {
      out[start + static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)] =
          static_cast<std::uint8_t>(bits >> (8 * b));
    }
  }
}

Matrix decode_le(std::span<const std::uint8_t> bytes, std::int64_t rows, std::int64_t cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    }
    m.data()[i] = std::bit_cast<double>(bits);
  }
  return m;
}

Manifest parse_manifest(const std::string& text, const fs::path& where) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorruptionError("manifest " + where.string() + " is not valid JSON: " + e.what());
  }
  Manifest man;
  try {
    if (!doc.is_object() || !doc.contains("version")) {
      throw CorruptionError("manifest " + where.string() + " has no version field");
    }
    man.version = doc.at("version").get<int>();
    if (man.version != kCheckpointFormatVersion) {
      throw VersionError("manifest " + where.string() + " has unsupported version " + std::to_string(man.version));
    }
    for (const auto& t : doc.at("tensors")) {
      ManifestEntry e;
      e.name = t.at("name").get<std::string>();
      e.rows = t.at("rows").get<std::int64_t>();
      e.cols = t.at("cols").get<std::int64_t>();
      e.offset = t.at("offset").get<std::uint64_t>();
      e.crc32 = t.at("crc32").get<std::uint32_t>();
      if (e.name.empty() || e.rows <= 0 || e.cols <= 0) {
        throw CorruptionError("manifest " + where.string() + " has an invalid tensor entry '" + e.name + "'");
      }
      man.tensors.push_back(std::move(e));
    }
    if (doc.contains("metadata")) {
      man.metadata = doc.at("metadata").get<Checkpoint::Metadata>();
    }
  } catch (const json::exception& e) {
    throw CorruptionError("manifest " + where.string() + " does not match the schema: " + e.what());
  }
  return man;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const fs::path& prefix) {
  std::vector<std::uint8_t> payload;
  json tensors = json::array();
  for (const auto& [name, m] : c.entries()) {
    const std::size_t offset = payload.size();
    append_le(payload, m);
    const auto crc = crc32(std::span<const std::uint8_t>(payload).subspan(offset));
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}, {"crc32", crc}});
  }
  json doc = {{"version", kCheckpointFormatVersion}, {"tensors", std::move(tensors)}, {"metadata", c.metadata()}};

  // payload first: a manifest never points at a payload that is not yet in place
  write_file_atomic(payload_path(prefix), payload);
  write_file_atomic(manifest_path(prefix), doc.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& prefix) {
  const fs::path mpath = manifest_path(prefix);
  if (!fs::exists(mpath)) {
    throw StorageError("checkpoint manifest not found: " + mpath.string());
  }
  return parse_manifest(read_text_file(mpath), mpath);
}

Checkpoint load_checkpoint(const fs::path& prefix) {
  const Manifest man = read_manifest(prefix);
  const fs::path ppath = payload_path(prefix);
  std::error_code ec;
  const std::uint64_t file_size = fs::file_size(ppath, ec);
  if (ec) {
    throw StorageError("checkpoint payload not found: " + ppath.string());
  }

  // bounds and overlap checks before any tensor allocation
  std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
  for (const auto& e : man.tensors) {
    const auto n = static_cast<std::uint64_t>(e.rows);
    const auto m = static_cast<std::uint64_t>(e.cols);
    if (n > file_size / 8 || m > file_size / 8 || n * m > file_size / 8) {
      throw CorruptionError("tensor '" + e.name + "' declares more data than the payload holds");
    }
    const std::uint64_t size = n * m * 8;
    if (e.offset > file_size || size > file_size - e.offset) {
      throw CorruptionError("tensor '" + e.name + "' lies outside the payload (offset " + std::to_string(e.offset) +
                            ", size " + std::to_string(size) + ", payload " + std::to_string(file_size) + ")");
    }
    spans.emplace_back(e.offset, e.offset + size);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first < spans[i - 1].second) {
      throw CorruptionError("manifest tensors overlap in payload " + ppath.string());
    }
  }

  std::ifstream in(ppath, std::ios::binary);
  if (!in) {
    throw StorageError("cannot open " + ppath.string());
  }
  Checkpoint out({}, man.metadata);
  std::vector<std::uint8_t> buf;
  for (const auto& e : man.tensors) {
    if (out.contains(e.name)) {
      throw CorruptionError("manifest lists tensor '" + e.name + "' twice");
    }
    buf.resize(e.byte_size());
    in.seekg(static_cast<std::streamoff>(e.offset));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) {
      throw CorruptionError("payload truncated while reading tensor '" + e.name + "'");
    }
    if (crc32(buf) != e.crc32) {
      throw CorruptionError("checksum mismatch in tensor '" + e.name + "'");
    }
    Matrix m = decode_le(buf, e.rows, e.cols);
    if (!all_finite(m)) {
      throw CorruptionError("tensor '" + e.name + "' contains non-finite values");
    }
    out.set(e.name, std::move(m));
  }
  return out;
}

CheckpointPair validate_pair(Checkpoint base, Checkpoint tuned) {
  std::vector<std::string> missing_in_tuned;
  std::vector<std::string> missing_in_base;
  for (const auto& name : base.names()) {
    if (!tuned.contains(name)) missing_in_tuned.push_back(name);
  }
  for (const auto& name : tuned.names()) {
    if (!base.contains(name)) missing_in_base.push_back(name);
  }
  if (!missing_in_tuned.empty() || !missing_in_base.empty()) {
    std::ostringstream msg;
    msg << "checkpoint tensor sets differ;";
    auto list = [&msg](const char* label, const std::vector<std::string>& names) {
      if (names.empty()) return;
      msg << ' ' << label << ':';
      for (const auto& n : names) msg << ' ' << n;
      msg << ';';
    };
    list("missing from tuned", missing_in_tuned);
    list("missing from base", missing_in_base);
    throw MismatchError(msg.str());
  }
  for (const auto& [name, m] : base.entries()) {
    const Matrix& t = tuned.at(name);
    if (m.rows() != t.rows() || m.cols() != t.cols()) {
      throw MismatchError("shape mismatch for tensor '" + name + "': base " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", tuned " + std::to_string(t.rows()) + "x" +
                          std::to_string(t.cols()));
    }
  }
  return {std::move(base), std::move(tuned)};
}

}  // namespace intruder
