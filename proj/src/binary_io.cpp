#include "rxsentinel/binary_io.hpp"

#include <bit>
#include <cstring>

#include "rxsentinel/errors.hpp"

namespace rxsentinel {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::f64s(std::span<const double> values) {
  for (double v : values) f64(v);
}

void ByteWriter::str(std::string_view s) {
  u64(s.size());
  bytes_.append(s);
}

void ByteReader::need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw FormatError("truncated binary payload");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return static_cast<std::uint8_t>(bytes_[pos_++]);
}

std::uint32_t ByteReader::u32() {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

void ByteReader::f64s(std::span<double> out) {
  need(out.size() * 8);
  for (double& v : out) v = f64();
}

std::string ByteReader::str() {
  const std::uint64_t n = u64();
  return std::string(raw(n));
}

std::string_view ByteReader::raw(std::size_t n) {
  need(n);
  auto out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

}  // namespace rxsentinel
