#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "acd/errors.hpp"
#include "acd/hash.hpp"
#include "acd/params.hpp"
#include "acd/rng.hpp"
#include "acd/token.hpp"

namespace acd {

/// Identifies which filter a report must target: all three must match for
/// two filters to probe (and therefore merge) identically.
struct FilterShape {
  std::uint64_t m_bits = 0;
  std::uint32_t k = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const FilterShape&, const FilterShape&) = default;
};

/// A plain Bloom filter over tokens. Probe indices come from the
/// Kirsch-Mitzenmacher double-hashing construction: h1 and h2 are the two
/// leading 64-bit halves of SHA-256(seed || token bytes), h2 forced odd,
/// index_i = (h1 + i*h2) mod m.
class BloomFilter {
 public:
  // Epoch sentinel for a filter that has never been stamped.
  static constexpr std::uint64_t kNoEpoch = ~0ULL;

  BloomFilter() = default;

  BloomFilter(std::uint64_t m_bits, std::uint32_t k, std::uint64_t seed)
      : m_bits_(m_bits), k_(k), seed_(seed), bits_((m_bits + 7) / 8, 0) {
    if (m_bits < 1) throw ValidationError("bloom filter m_bits out of range (need >= 1)");
    if (k < 1) throw ValidationError("bloom filter k out of range (need >= 1)");
  }

  std::uint64_t m_bits() const noexcept { return m_bits_; }
  std::uint32_t k() const noexcept { return k_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t n_inserted() const noexcept { return n_inserted_; }
  std::uint64_t epoch_first() const noexcept { return epoch_first_; }
  std::uint64_t epoch_last() const noexcept { return epoch_last_; }
  bool has_epochs() const noexcept { return epoch_first_ <= epoch_last_; }
  const std::vector<std::uint8_t>& bit_bytes() const noexcept { return bits_; }
  FilterShape shape() const noexcept { return {m_bits_, k_, seed_}; }

  /// floor(m * ln 2 / k): the load at which the false-positive probability
  /// reaches the designed value.
  static std::uint64_t capacity(std::uint64_t m_bits, std::uint32_t k) {
    return static_cast<std::uint64_t>(
        std::floor(static_cast<double>(m_bits) * std::log(2.0) / static_cast<double>(k)));
  }
  std::uint64_t capacity() const { return capacity(m_bits_, k_); }

  void insert(const Token& token) {
    probe(token, [this](std::uint64_t idx) { set_bit(idx); return true; });
    ++n_inserted_;
  }

  bool contains(const Token& token) const {
    bool all = true;
    probe(token, [this, &all](std::uint64_t idx) {
      all = get_bit(idx);
      return all;  // stop at the first clear bit
    });
    return all;
  }

  /// Bit-wise OR of another filter of identical shape into this one.
  /// n_inserted sums, as an upper bound on distinct insertions.
  void merge(const BloomFilter& other) {
    require_same_shape(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
    n_inserted_ += other.n_inserted_;
    if (other.has_epochs()) {
      note_epoch(other.epoch_first_);
      note_epoch(other.epoch_last_);
    }
  }

  /// Marks the tick range this filter's contents cover (registry bookkeeping).
  void note_epoch(std::uint64_t tick) {
    if (!has_epochs()) {
      epoch_first_ = epoch_last_ = tick;
    } else {
      epoch_first_ = std::min(epoch_first_, tick);
      epoch_last_ = std::max(epoch_last_, tick);
    }
  }

  /// Sets every bit; the adversary's all-1 report.
  void saturate() {
    std::fill(bits_.begin(), bits_.end(), 0xFF);
    mask_pad_bits();
  }

  std::uint64_t popcount() const {
    std::uint64_t n = 0;
    for (std::uint8_t b : bits_) n += static_cast<std::uint64_t>(__builtin_popcount(b));
    return n;
  }

  double fill_ratio() const {
    return m_bits_ == 0 ? 0.0 : static_cast<double>(popcount()) / static_cast<double>(m_bits_);
  }

  // Serialized record: m_bits u64, k u16, seed u64, epoch_first u64,
  // epoch_last u64, n_inserted u64, then ceil(m/8) bytes with bit i at
  // byte i/8, bit position i%8, pad bits zero. All integers little-endian.
  void serialize_record(std::vector<std::uint8_t>& out) const {
    put_u64le(out, m_bits_);
    put_u16le(out, static_cast<std::uint16_t>(k_));
    put_u64le(out, seed_);
    put_u64le(out, epoch_first_);
    put_u64le(out, epoch_last_);
    put_u64le(out, n_inserted_);
    out.insert(out.end(), bits_.begin(), bits_.end());
  }

  static BloomFilter deserialize_record(ByteReader& r) {
    const std::uint64_t m = r.u64();
    const std::uint32_t k = r.u16();
    const std::uint64_t seed = r.u64();
    const std::uint64_t e_first = r.u64();
    const std::uint64_t e_last = r.u64();
    const std::uint64_t n = r.u64();
    BloomFilter f(m, k, seed);
    auto raw = r.bytes(f.bits_.size());
    std::copy(raw.begin(), raw.end(), f.bits_.begin());
    // Reject nonzero pad bits so round trips stay bit-exact.
    const std::uint32_t rem = static_cast<std::uint32_t>(m % 8);
    if (rem != 0 && (f.bits_.back() & ~((1u << rem) - 1u)) != 0) {
      throw IoError("nonzero pad bits in bloom filter record");
    }
    if (e_first > e_last && !(e_first == kNoEpoch && e_last == 0)) {
      throw IoError("bloom filter epoch range inverted");
    }
    f.n_inserted_ = n;
    f.epoch_first_ = e_first;
    f.epoch_last_ = e_last;
    return f;
  }

  std::size_t serialized_size() const { return 8 + 2 + 8 + 8 + 8 + 8 + bits_.size(); }

  friend bool operator==(const BloomFilter& a, const BloomFilter& b) {
    return a.m_bits_ == b.m_bits_ && a.k_ == b.k_ && a.seed_ == b.seed_ &&
           a.n_inserted_ == b.n_inserted_ &&
           a.epoch_first_ == b.epoch_first_ && a.epoch_last_ == b.epoch_last_ &&
           a.bits_ == b.bits_;
  }

 private:
  void require_same_shape(const BloomFilter& other) const {
    if (m_bits_ != other.m_bits_) {
      throw ShapeMismatchError("filter shape mismatch: m_bits " + std::to_string(other.m_bits_) +
                               " != " + std::to_string(m_bits_));
    }
    if (k_ != other.k_) {
      throw ShapeMismatchError("filter shape mismatch: k " + std::to_string(other.k_) +
                               " != " + std::to_string(k_));
    }
    if (seed_ != other.seed_) {
      throw ShapeMismatchError("filter shape mismatch: seed " + std::to_string(other.seed_) +
                               " != " + std::to_string(seed_));
    }
  }

  template <typename Fn>
  void probe(const Token& token, Fn&& visit) const {
    Sha256 h;
    h.update_u64(seed_);
    h.update(token.bytes());
    const Digest d = h.finish();
    std::uint64_t h1 = 0, h2 = 0;
    for (int i = 0; i < 8; ++i) {
      h1 |= static_cast<std::uint64_t>(d[static_cast<std::size_t>(i)]) << (8 * i);
      h2 |= static_cast<std::uint64_t>(d[static_cast<std::size_t>(i + 8)]) << (8 * i);
    }
    h2 |= 1;  // odd stride hits all residues
    std::uint64_t idx = h1 % m_bits_;
    for (std::uint32_t i = 0; i < k_; ++i) {
      if (!visit(idx)) return;
      idx += h2 % m_bits_;
      if (idx >= m_bits_) idx -= m_bits_;
    }
  }

  void set_bit(std::uint64_t i) { bits_[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8)); }
  bool get_bit(std::uint64_t i) const { return (bits_[i / 8] >> (i % 8)) & 1u; }

  void mask_pad_bits() {
    const std::uint32_t rem = static_cast<std::uint32_t>(m_bits_ % 8);
    if (rem != 0 && !bits_.empty()) bits_.back() &= static_cast<std::uint8_t>((1u << rem) - 1u);
  }

  std::uint64_t m_bits_ = 0;
  std::uint32_t k_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint8_t> bits_;
  std::uint64_t n_inserted_ = 0;
  std::uint64_t epoch_first_ = kNoEpoch;
  std::uint64_t epoch_last_ = 0;
};

inline BloomFilter filter_union(const BloomFilter& a, const BloomFilter& b) {
  BloomFilter out = a;
  out.merge(b);
  return out;
}

/// Geometrically growing chain of Bloom filters. Only the last filter
/// accepts insertions; when it reaches capacity the next filter of size
/// ceil(alpha * m) is appended immediately, so the published active shape
/// always has room for the next report.
class FilterChain {
 public:
  static constexpr char kMagic[4] = {'A', 'C', 'D', 'B'};
  static constexpr std::uint16_t kFormatVersion = 1;

  FilterChain() = default;

  FilterChain(double p_fp, std::uint64_t initial_bits, double alpha,
              std::uint64_t seed_source)
      : p_fp_(p_fp), initial_bits_(initial_bits), alpha_(alpha),
        k_(derive_k(p_fp)), seeds_(seed_source) {
    if (!(alpha > 1.0)) throw ValidationError("growth_factor_alpha out of range (need > 1)");
    if (initial_bits < 1) throw ValidationError("initial_filter_bits_s out of range (need >= 1)");
  }

  const std::vector<BloomFilter>& filters() const noexcept { return filters_; }
  bool empty() const noexcept { return filters_.empty(); }
  double p_fp() const noexcept { return p_fp_; }

  /// The filter currently accepting insertions, created on first use.
  BloomFilter& active() {
    if (filters_.empty()) append_next();
    return filters_.back();
  }

  FilterShape active_shape() {
    return active().shape();
  }

  void insert(const Token& token, std::uint64_t now_tick) {
    BloomFilter& f = writable();
    f.insert(token);
    f.note_epoch(now_tick);
    grow_if_full();
  }

  bool contains(const Token& token) const {
    for (const auto& f : filters_) {
      if (f.contains(token)) return true;
    }
    return false;
  }

  /// OR-merges a medical report into the active filter. The report must
  /// match the active shape exactly; reports against retired shapes throw
  /// with the mismatched field named.
  void ingest_report(const BloomFilter& report, std::uint64_t now_tick) {
    BloomFilter& f = writable();
    f.merge(report);
    f.note_epoch(now_tick);
    grow_if_full();
  }

  /// Whole-filter expiry: per-entry deletion is impossible in a plain
  /// Bloom filter, so a filter goes when everything it covers is stale.
  void drop_expired(std::uint64_t cutoff_tick) {
    std::erase_if(filters_, [cutoff_tick](const BloomFilter& f) {
      return f.n_inserted() > 0 && f.has_epochs() && f.epoch_last() < cutoff_tick;
    });
  }

  std::uint64_t total_inserted() const {
    std::uint64_t n = 0;
    for (const auto& f : filters_) n += f.n_inserted();
    return n;
  }

  std::size_t serialized_size() const {
    std::size_t n = 4 + 2 + 2;
    for (const auto& f : filters_) n += f.serialized_size();
    return n;
  }

  // Chain format: magic "ACDB", format_version u16, filter_count u16,
  // then each filter record in chain order.
  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(serialized_size());
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u16le(out, kFormatVersion);
    put_u16le(out, static_cast<std::uint16_t>(filters_.size()));
    for (const auto& f : filters_) f.serialize_record(out);
    return out;
  }

  static FilterChain deserialize(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    auto magic = r.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
      throw IoError("bad magic: expected ACDB");
    }
    const std::uint16_t version = r.u16();
    if (version != kFormatVersion) {
      throw IoError("unsupported chain format version " + std::to_string(version));
    }
    const std::uint16_t count = r.u16();
    FilterChain chain;
    chain.filters_.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
      chain.filters_.push_back(BloomFilter::deserialize_record(r));
    }
    r.expect_end();
    if (!chain.filters_.empty()) chain.k_ = chain.filters_.back().k();
    return chain;
  }

  friend bool operator==(const FilterChain& a, const FilterChain& b) {
    return a.filters_ == b.filters_;
  }

 private:
  BloomFilter& writable() {
    if (filters_.empty()) append_next();
    // Deserialized or merged chains can arrive with a full tail filter.
    if (filters_.back().n_inserted() >= filters_.back().capacity()) append_next();
    return filters_.back();
  }

  void grow_if_full() {
    if (filters_.back().n_inserted() >= filters_.back().capacity()) append_next();
  }

  void append_next() {
    std::uint64_t m = filters_.empty()
        ? initial_bits_
        : static_cast<std::uint64_t>(std::ceil(alpha_ * static_cast<double>(filters_.back().m_bits())));
    filters_.emplace_back(m, k_, seeds_.next());
  }

  std::vector<BloomFilter> filters_;
  double p_fp_ = 0.01;
  std::uint64_t initial_bits_ = 64;
  double alpha_ = 2.0;
  std::uint32_t k_ = 7;
  SplitMix64 seeds_{0};
};

}  // namespace acd
