#pragma once

#include <string>
#include <vector>

#include "bbci/core/matrix.hpp"

namespace bbci {

// Repo-wide checkpoint container: a plain-text sequence of named arrays.
// Each array is a header line `name kind rows cols` followed by `rows`
// lines of `cols` decimal values (row-major, %.17g so doubles round-trip
// bit-exactly), and the file ends with a digest line over every byte
// above it.
struct NamedArray {
  std::string name;
  std::string kind;
  Matrix value;
};

struct Checkpoint {
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  }

  const NamedArray& at(const std::string& name) const {
    const NamedArray* a = find(name);
    if (!a) throw std::runtime_error("checkpoint: missing array '" + name + "'");
    return *a;
  }

  void add(std::string name, std::string kind, Matrix value) {
    arrays.push_back({std::move(name), std::move(kind), std::move(value)});
  }
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);  // verifies the digest line

// Digest the checkpoint would carry when saved; used as the content hash
// of network parameters (e.g. the frozen-emulator digest).
std::string checkpoint_digest(const Checkpoint& ckpt);

void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint_file(const std::string& path);

}  // namespace bbci
