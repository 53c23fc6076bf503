//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "chg/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace chg {

namespace {

constexpr char kMagic[8] = {'C', 'H', 'G', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
public:
  Reader(const std::string& buf, const std::string& path)
      : buf_(buf), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(buf_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(buf_[pos_ + i]))
           << (8 * i);
    pos_ += 8;
    return v;
  }

  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  unsigned char byte() {
    need(1);
    return static_cast<unsigned char>(buf_[pos_++]);
  }

  std::size_t pos() const { return pos_; }
  const std::string& buffer() const { return buf_; }

  void need(std::size_t n) const {
    if (pos_ + n > buf_.size())
      throw IoError("truncated checkpoint: " + path_);
  }

private:
  const std::string& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::set_meta(const std::string& name, long long value) {
  for (auto& [n, v] : meta) {
    if (n == name) {
      v = value;
      return;
    }
  }
  meta.emplace_back(name, value);
}

long long Checkpoint::meta_value(const std::string& name,
                                 long long fallback) const {
  for (const auto& [n, v] : meta)
    if (n == name) return v;
  return fallback;
}

void Checkpoint::set_text(const std::string& name, std::string value) {
  for (auto& [n, v] : texts) {
    if (n == name) {
      v = std::move(value);
      return;
    }
  }
  texts.emplace_back(name, std::move(value));
}

const std::string* Checkpoint::find_text(const std::string& name) const {
  for (const auto& [n, v] : texts)
    if (n == name) return &v;
  return nullptr;
}

void Checkpoint::add_tensor(const std::string& name, Tensor t) {
  for (auto& [n, v] : tensors) {
    if (n == name) {
      v = std::move(t);
      return;
    }
  }
  tensors.emplace_back(name, std::move(t));
}

const Tensor* Checkpoint::find_tensor(const std::string& name) const {
  for (const auto& [n, v] : tensors)
    if (n == name) return &v;
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u64(out, ckpt.config_hash);

  put_u32(out, static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [name, value] : ckpt.meta) {
    put_str(out, name);
    put_u64(out, static_cast<std::uint64_t>(value));
  }

  put_u32(out, static_cast<std::uint32_t>(ckpt.texts.size()));
  for (const auto& [name, value] : ckpt.texts) {
    put_str(out, name);
    put_str(out, value);
  }

  // Manifest first, then payloads; offsets are absolute so a reader can seek
  // straight to one tensor. Offsets are not known until the manifest size
  // is, so lay the manifest out, then patch.
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  std::vector<std::size_t> offset_slots;
  for (const auto& [name, t] : ckpt.tensors) {
    put_str(out, name);
    out.push_back(ckpt.store_f32 ? 1 : 0);
    put_u32(out, static_cast<std::uint32_t>(t.rows));
    put_u32(out, static_cast<std::uint32_t>(t.cols));
    offset_slots.push_back(out.size());
    put_u64(out, 0);
  }
  for (std::size_t k = 0; k < ckpt.tensors.size(); ++k) {
    const Tensor& t = ckpt.tensors[k].second;
    const std::uint64_t offset = out.size();
    std::string patched;
    put_u64(patched, offset);
    out.replace(offset_slots[k], 8, patched);
    if (ckpt.store_f32) {
      for (double x : t.data) {
        const float f = static_cast<float>(x);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
      }
    } else {
      const std::size_t bytes = t.data.size() * sizeof(double);
      const std::size_t at = out.size();
      out.resize(out.size() + bytes);
      if (bytes > 0) std::memcpy(out.data() + at, t.data.data(), bytes);
    }
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot move " + tmp + " into place");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string buf = ss.str();

  Reader r(buf, path);
  r.need(sizeof(kMagic));
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a checkpoint file: " + path);
  for (int i = 0; i < 8; ++i) r.byte();

  Checkpoint out;
  out.config_hash = r.u64();

  std::set<std::string> seen;
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string name = r.str();
    if (!seen.insert("m:" + name).second)
      throw IoError("duplicate metadata name in " + path);
    out.meta.emplace_back(name, static_cast<long long>(r.u64()));
  }

  const std::uint32_t n_text = r.u32();
  for (std::uint32_t i = 0; i < n_text; ++i) {
    std::string name = r.str();
    if (!seen.insert("t:" + name).second)
      throw IoError("duplicate text name in " + path);
    out.texts.emplace_back(name, r.str());
  }

  const std::uint32_t n_tensors = r.u32();
  struct Entry {
    std::string name;
    bool f32;
    int rows, cols;
    std::uint64_t offset;
  };
  std::vector<Entry> entries;
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    Entry e;
    e.name = r.str();
    if (!seen.insert("T:" + e.name).second)
      throw IoError("duplicate tensor name in " + path);
    const unsigned char dtype = r.byte();
    if (dtype > 1) throw IoError("unknown tensor dtype in " + path);
    e.f32 = dtype == 1;
    e.rows = static_cast<int>(r.u32());
    e.cols = static_cast<int>(r.u32());
    e.offset = r.u64();
    entries.push_back(std::move(e));
  }

  for (const auto& e : entries) {
    out.store_f32 = out.store_f32 || e.f32;
    Tensor t(e.rows, e.cols);
    const std::size_t n = t.data.size();
    const std::size_t width = e.f32 ? 4 : 8;
    if (e.offset + n * width > buf.size())
      throw IoError("truncated checkpoint: " + path);
    if (e.f32) {
      for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, buf.data() + e.offset + 4 * i, 4);
        float fv;
        std::memcpy(&fv, &bits, 4);
        t.data[i] = static_cast<double>(fv);
      }
    } else if (n > 0) {
      std::memcpy(t.data.data(), buf.data() + e.offset, n * 8);
    }
    out.tensors.emplace_back(e.name, std::move(t));
  }
  return out;
}

}  // namespace chg
