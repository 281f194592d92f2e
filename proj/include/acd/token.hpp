#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "acd/errors.hpp"
#include "acd/hash.hpp"

namespace acd {

/// An opaque lambda-bit value: a broadcast token, a validity preimage, a
/// freshness nonce, or a per-encounter combined hash. Bits live big-endian
/// in the leading bytes; pad bits in the last byte are always zero, so
/// byte-wise lexicographic comparison is unsigned big-endian comparison.
class Token {
 public:
  static constexpr std::uint32_t kMaxBits = 256;

  Token() = default;

  static Token from_digest(const Digest& d, std::uint32_t bits) {
    return from_bytes({d.data(), d.size()}, bits);
  }

  /// Builds a token from at least ceil(bits/8) source bytes; pad bits are
  /// masked to zero.
  static Token from_bytes(std::span<const std::uint8_t> src, std::uint32_t bits) {
    if (bits == 0 || bits > kMaxBits) throw Error("token bit length out of range");
    Token t;
    t.bits_ = static_cast<std::uint16_t>(bits);
    const std::size_t nbytes = t.byte_size();
    if (src.size() < nbytes) throw Error("too few bytes for token");
    for (std::size_t i = 0; i < nbytes; ++i) t.data_[i] = src[i];
    const std::uint32_t rem = bits % 8;
    if (rem != 0) {
      t.data_[nbytes - 1] &= static_cast<std::uint8_t>(0xFFu << (8 - rem));
    }
    return t;
  }

  static Token from_hex(std::string_view hex, std::uint32_t bits) {
    if (hex.size() != ((bits + 7) / 8) * 2) throw Error("hex length does not match token width");
    std::array<std::uint8_t, 32> raw{};
    for (std::size_t i = 0; i < hex.size(); i += 2) {
      raw[i / 2] = static_cast<std::uint8_t>((nibble(hex[i]) << 4) | nibble(hex[i + 1]));
    }
    return from_bytes({raw.data(), raw.size()}, bits);
  }

  std::uint32_t bits() const noexcept { return bits_; }
  std::size_t byte_size() const noexcept { return (static_cast<std::size_t>(bits_) + 7) / 8; }
  bool empty() const noexcept { return bits_ == 0; }

  std::span<const std::uint8_t> bytes() const noexcept {
    return {data_.data(), byte_size()};
  }

  std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(byte_size() * 2);
    for (std::size_t i = 0; i < byte_size(); ++i) {
      out.push_back(kDigits[data_[i] >> 4]);
      out.push_back(kDigits[data_[i] & 0xF]);
    }
    return out;
  }

  friend bool operator==(const Token& a, const Token& b) noexcept {
    return a.bits_ == b.bits_ && a.data_ == b.data_;
  }

  /// Unsigned big-endian (lexicographic) order over the value bytes.
  friend bool operator<(const Token& a, const Token& b) noexcept {
    if (a.data_ != b.data_) return a.data_ < b.data_;
    return a.bits_ < b.bits_;
  }

 private:
  static std::uint8_t nibble(char c) {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw Error("invalid hex digit");
  }

  std::array<std::uint8_t, 32> data_{};
  std::uint16_t bits_ = 0;
};

struct TokenHasher {
  std::size_t operator()(const Token& t) const noexcept {
    // Tokens are uniform random; the first bytes are already a good hash.
    std::uint64_t v = 0;
    auto b = t.bytes();
    for (std::size_t i = 0; i < b.size() && i < 8; ++i) {
      v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return static_cast<std::size_t>(v ^ (static_cast<std::uint64_t>(t.bits()) << 56));
  }
};

}  // namespace acd
