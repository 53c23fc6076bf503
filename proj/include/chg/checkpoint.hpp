//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_CHECKPOINT_HPP
#define CHG_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chg/tensor.hpp"

namespace chg {

// A serializable bundle of named tensors plus the bookkeeping needed to
// resume a run exactly: integer metadata (epoch, optimizer step, RNG
// counter), text blobs (run config, fragment vocabulary), and the config
// hash the tensors were trained under.
//
// File layout (versioned header `CHGCKPT1`, little-endian throughout):
// magic, config hash, metadata ints, text blobs, then a tensor manifest of
// (name, dtype, rows, cols, byte offset) followed by the raw payloads.
struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::vector<std::pair<std::string, long long>> meta;
  std::vector<std::pair<std::string, std::string>> texts;
  std::vector<std::pair<std::string, Tensor>> tensors;
  // When true every tensor payload is written as 32-bit floats (lossy);
  // loading widens back to 64-bit and keeps this flag set.
  bool store_f32 = false;

  void set_meta(const std::string& name, long long value);
  // Returns `fallback` when absent.
  long long meta_value(const std::string& name, long long fallback = 0) const;
  void set_text(const std::string& name, std::string value);
  const std::string* find_text(const std::string& name) const;
  void add_tensor(const std::string& name, Tensor t);
  const Tensor* find_tensor(const std::string& name) const;
};

// Writes atomically enough for our use: full serialization then one rename.
// Throws IoError on any filesystem or encoding failure.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// Throws IoError on missing file, bad magic, truncation, duplicate names,
// or an unknown dtype tag.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace chg

#endif  // CHG_CHECKPOINT_HPP
