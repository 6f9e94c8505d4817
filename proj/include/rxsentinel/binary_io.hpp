#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace rxsentinel {

/// Little-endian byte sink, independent of host byte order.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64s(std::span<const double> values);
  /// u64 length prefix, then raw bytes.
  void str(std::string_view s);
  void raw(std::string_view s) { bytes_.append(s); }

  const std::string& bytes() const noexcept { return bytes_; }
  std::string take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

/// Bounds-checked reader; every overrun throws FormatError.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void f64s(std::span<double> out);
  std::string str();
  std::string_view raw(std::size_t n);

  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace rxsentinel
