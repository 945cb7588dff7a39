#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "clothrl/core/errors.hpp"

namespace clothrl {

// Binary container of named arrays, used for checkpoints and simulator
// snapshots. Round trips are bit-exact (payloads are raw IEEE-754 bytes).
//
// Byte layout (little-endian):
//   magic   "CRLC" (4 bytes)
//   u32     format version (currently 1)
//   u64     config hash
//   u64     entry count
//   entries, each:
//     u32   name length, then name bytes
//     u8    dtype (0 = f64, 1 = i64, 2 = bytes)
//     u32   rank, then u64 dims[rank]
//     payload: prod(dims) elements of 8 bytes (f64/i64) or prod(dims) bytes
//   u32     CRC-32 (IEEE) over everything after the magic
class Container {
 public:
  enum class Type : std::uint8_t { f64 = 0, i64 = 1, bytes = 2 };

  struct Entry {
    Type type = Type::f64;
    std::vector<std::uint64_t> shape;
    std::vector<double> f64;
    std::vector<std::int64_t> i64;
    std::string bytes;

    std::uint64_t element_count() const {
      std::uint64_t n = 1;
      for (auto d : shape) n *= d;
      return n;
    }
  };

  void set_config_hash(std::uint64_t h) { config_hash_ = h; }
  std::uint64_t config_hash() const { return config_hash_; }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::size_t size() const { return entries_.size(); }

  void put_f64(const std::string& name, std::vector<std::uint64_t> shape,
               std::vector<double> data) {
    Entry e;
    e.type = Type::f64;
    e.shape = std::move(shape);
    e.f64 = std::move(data);
    check_count(name, e.element_count(), e.f64.size());
    entries_[name] = std::move(e);
  }

  void put_i64(const std::string& name, std::vector<std::uint64_t> shape,
               std::vector<std::int64_t> data) {
    Entry e;
    e.type = Type::i64;
    e.shape = std::move(shape);
    e.i64 = std::move(data);
    check_count(name, e.element_count(), e.i64.size());
    entries_[name] = std::move(e);
  }

  void put_bytes(const std::string& name, std::string data) {
    Entry e;
    e.type = Type::bytes;
    e.shape = {data.size()};
    e.bytes = std::move(data);
    entries_[name] = std::move(e);
  }

  void put_scalar(const std::string& name, double v) { put_f64(name, {1}, {v}); }
  void put_scalar_i64(const std::string& name, std::int64_t v) { put_i64(name, {1}, {v}); }

  const Entry& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw FormatError("container: missing entry '" + name + "'");
    return it->second;
  }

  const std::vector<double>& f64(const std::string& name) const {
    const Entry& e = at(name);
    if (e.type != Type::f64) throw FormatError("container: '" + name + "' is not f64");
    return e.f64;
  }
  const std::vector<std::int64_t>& i64(const std::string& name) const {
    const Entry& e = at(name);
    if (e.type != Type::i64) throw FormatError("container: '" + name + "' is not i64");
    return e.i64;
  }
  const std::string& bytes(const std::string& name) const {
    const Entry& e = at(name);
    if (e.type != Type::bytes) throw FormatError("container: '" + name + "' is not bytes");
    return e.bytes;
  }
  double scalar(const std::string& name) const {
    const auto& v = f64(name);
    if (v.size() != 1) throw FormatError("container: '" + name + "' is not a scalar");
    return v[0];
  }
  std::int64_t scalar_i64(const std::string& name) const {
    const auto& v = i64(name);
    if (v.size() != 1) throw FormatError("container: '" + name + "' is not a scalar");
    return v[0];
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::string serialize() const {
    std::string out;
    out.append("CRLC", 4);
    append_u32(out, 1);
    append_u64(out, config_hash_);
    append_u64(out, entries_.size());
    for (const auto& [name, e] : entries_) {
      append_u32(out, std::uint32_t(name.size()));
      out.append(name);
      out.push_back(char(std::uint8_t(e.type)));
      append_u32(out, std::uint32_t(e.shape.size()));
      for (auto d : e.shape) append_u64(out, d);
      switch (e.type) {
        case Type::f64:
          append_raw(out, e.f64.data(), e.f64.size() * sizeof(double));
          break;
        case Type::i64:
          append_raw(out, e.i64.data(), e.i64.size() * sizeof(std::int64_t));
          break;
        case Type::bytes:
          out.append(e.bytes);
          break;
      }
    }
    append_u32(out, crc32(out.data() + 4, out.size() - 4));
    return out;
  }

  static Container deserialize(const std::string& buf) {
    if (buf.size() < 4 + 4 + 8 + 8 + 4 || std::memcmp(buf.data(), "CRLC", 4) != 0)
      throw FormatError("container: bad magic");
    const std::uint32_t stored_crc = read_u32(buf, buf.size() - 4);
    const std::uint32_t actual_crc = crc32(buf.data() + 4, buf.size() - 8);
    if (stored_crc != actual_crc) throw ChecksumError("container: checksum mismatch");

    Container c;
    std::size_t pos = 4;
    const std::uint32_t version = read_u32(buf, pos);
    pos += 4;
    if (version != 1) throw FormatError("container: unsupported version");
    c.config_hash_ = read_u64(buf, pos);
    pos += 8;
    const std::uint64_t count = read_u64(buf, pos);
    pos += 8;
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::uint32_t name_len = read_u32(buf, pos);
      pos += 4;
      std::string name = buf.substr(pos, name_len);
      pos += name_len;
      Entry e;
      e.type = Type(std::uint8_t(buf.at(pos)));
      pos += 1;
      const std::uint32_t rank = read_u32(buf, pos);
      pos += 4;
      e.shape.resize(rank);
      for (std::uint32_t r = 0; r < rank; ++r) {
        e.shape[r] = read_u64(buf, pos);
        pos += 8;
      }
      const std::uint64_t n = e.element_count();
      switch (e.type) {
        case Type::f64:
          e.f64.resize(n);
          read_raw(buf, pos, e.f64.data(), n * sizeof(double));
          pos += n * sizeof(double);
          break;
        case Type::i64:
          e.i64.resize(n);
          read_raw(buf, pos, e.i64.data(), n * sizeof(std::int64_t));
          pos += n * sizeof(std::int64_t);
          break;
        case Type::bytes:
          if (pos + n > buf.size()) throw FormatError("container: truncated entry");
          e.bytes = buf.substr(pos, n);
          pos += n;
          break;
        default:
          throw FormatError("container: unknown dtype");
      }
      c.entries_[std::move(name)] = std::move(e);
    }
    return c;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("container: cannot open for write: " + path);
    const std::string buf = serialize();
    f.write(buf.data(), std::streamsize(buf.size()));
    if (!f) throw FormatError("container: write failed: " + path);
  }

  static Container load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("container: cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(buf);
  }

  static std::uint32_t crc32(const void* data, std::size_t n) {
    static const std::array<std::uint32_t, 256> table = [] {
      std::array<std::uint32_t, 256> t{};
      for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        t[i] = c;
      }
      return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
  }

 private:
  static void check_count(const std::string& name, std::uint64_t expect, std::size_t got) {
    if (expect != got)
      throw ShapeError("container: shape/data mismatch for '" + name + "'");
  }
  static void append_raw(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
  }
  static void append_u32(std::string& out, std::uint32_t v) { append_raw(out, &v, 4); }
  static void append_u64(std::string& out, std::uint64_t v) { append_raw(out, &v, 8); }
  static std::uint32_t read_u32(const std::string& b, std::size_t pos) {
    std::uint32_t v;
    if (pos + 4 > b.size()) throw FormatError("container: truncated");
    std::memcpy(&v, b.data() + pos, 4);
    return v;
  }
  static std::uint64_t read_u64(const std::string& b, std::size_t pos) {
    std::uint64_t v;
    if (pos + 8 > b.size()) throw FormatError("container: truncated");
    std::memcpy(&v, b.data() + pos, 8);
    return v;
  }
  static void read_raw(const std::string& b, std::size_t pos, void* p, std::size_t n) {
    if (pos + n > b.size()) throw FormatError("container: truncated entry");
    std::memcpy(p, b.data() + pos, n);
  }

  std::map<std::string, Entry> entries_;
  std::uint64_t config_hash_ = 0;
};

}  // namespace clothrl
