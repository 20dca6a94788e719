#pragma once

// Canonical little-endian binary encoding shared by state snapshots and
// checkpoints (same conventions as the wire format).

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace whacsim {

class CanonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CanonWriter {
 public:
  std::vector<uint8_t> take() { return std::move(buf_); }
  const std::vector<uint8_t>& bytes() const { return buf_; }

  void u8(uint8_t v) { buf_.push_back(v); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void f64_vec(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }

 private:
  std::vector<uint8_t> buf_;
};

class CanonReader {
 public:
  explicit CanonReader(std::span<const uint8_t> data) : data_(data) {}

  bool done() const { return pos_ == data_.size(); }

  uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  int64_t i64() { return static_cast<int64_t>(u64()); }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<double> f64_vec() {
    uint64_t n = u64();
    need(n * 8);
    std::vector<double> v(n);
    for (uint64_t i = 0; i < n; ++i) v[i] = f64();
    return v;
  }

 private:
  void need(size_t n) {
    if (data_.size() - pos_ < n) throw CanonError("snapshot truncated");
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

}  // namespace whacsim
