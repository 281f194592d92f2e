#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "acd/errors.hpp"
#include "acd/hash.hpp"
#include "acd/params.hpp"
#include "acd/rng.hpp"
#include "acd/token.hpp"

namespace acd {

/// One token the device itself generated: the value, the tick it first
/// went on the air, and (validity mode only) the preimage whose hash it is.
struct TokenRecord {
  Token token;
  std::uint64_t epoch_tick = 0;
  std::optional<Token> preimage;
};

/// One value the device heard: exactly lambda bits plus the receipt tick.
/// Nothing else from the radio layer survives into stored state.
struct HeardRecord {
  Token value;
  std::uint64_t receipt_tick = 0;
};

struct DeviceState {
  std::uint64_t device_id = 0;
  std::vector<TokenRecord> own_log;    // ordered by epoch_tick
  std::vector<HeardRecord> heard_log;  // ordered by receipt_tick
  TokenRecord current;
  std::uint64_t rng_seed = 0;
  std::uint64_t last_tick = 0;
};

namespace detail {

// Token material is a SHA-256 PRF keyed by (seed, tick) alone: device_id
// never enters the derivation, so the stream carries no identity
// dependence. Fresh randomness per epoch, never derived from prior tokens.
inline Token device_material(std::uint64_t seed, std::uint64_t tick,
                             std::uint8_t domain, std::uint32_t lambda) {
  Sha256 h;
  const std::uint8_t tag[4] = {'A', 'C', 'D', domain};
  h.update({tag, 4});
  h.update_u64(seed);
  h.update_u64(tick);
  return Token::from_digest(h.finish(), lambda);
}

inline Token token_from_preimage(const Token& preimage, std::uint32_t lambda) {
  return Token::from_digest(sha256(preimage.bytes()), lambda);
}

inline TokenRecord fresh_record(std::uint64_t seed, std::uint64_t tick,
                                const ProtocolParams& params) {
  TokenRecord rec;
  rec.epoch_tick = tick;
  if (params.validity_check) {
    rec.preimage = device_material(seed, tick, 'P', params.token_len_bits);
    rec.token = token_from_preimage(*rec.preimage, params.token_len_bits);
  } else {
    rec.token = device_material(seed, tick, 'T', params.token_len_bits);
  }
  return rec;
}

/// Per-tick rotation coin; cheap mixing is fine here, the coin decides
/// timing only and never becomes token material.
inline double rotation_coin(std::uint64_t seed, std::uint64_t tick) {
  std::uint64_t z = mix64(seed ^ mix64(tick ^ 0x726F74617465ULL));
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Drops every record older than the retention horizon. Records exactly at
/// now - retention_ticks survive.
inline void prune(DeviceState& state, std::uint64_t now_tick,
                  const ProtocolParams& params) {
  if (now_tick < params.retention_ticks) return;
  const std::uint64_t cutoff = now_tick - params.retention_ticks;
  std::size_t keep = 0;
  while (keep < state.own_log.size() && state.own_log[keep].epoch_tick < cutoff) ++keep;
  if (keep > 0) state.own_log.erase(state.own_log.begin(), state.own_log.begin() + static_cast<std::ptrdiff_t>(keep));
  keep = 0;
  while (keep < state.heard_log.size() && state.heard_log[keep].receipt_tick < cutoff) ++keep;
  if (keep > 0) state.heard_log.erase(state.heard_log.begin(), state.heard_log.begin() + static_cast<std::ptrdiff_t>(keep));
}

/// A device joins with one fresh token at tick 0 (it must broadcast
/// something) and empty logs. No registration anywhere.
inline DeviceState init_device(std::uint64_t device_id,
                               const ProtocolParams& params,
                               std::uint64_t seed) {
  DeviceState state;
  state.device_id = device_id;
  state.rng_seed = seed;
  state.last_tick = 0;
  state.current = detail::fresh_record(seed, 0, params);
  if (!params.freshness_check) {
    // In freshness mode broadcast values are minted per tick by
    // make_broadcast; only those belong in the own log.
    state.own_log.push_back(state.current);
  }
  return state;
}

/// Advances the device clock: with probability p_new a fresh token is
/// generated, logged and becomes current; retention pruning applies.
inline void advance_tick(DeviceState& state, std::uint64_t now_tick,
                         const ProtocolParams& params) {
  if (now_tick <= state.last_tick) {
    throw Error("advance_tick: non-monotone tick " + std::to_string(now_tick) +
                " (last " + std::to_string(state.last_tick) + ")");
  }
  state.last_tick = now_tick;
  if (!params.freshness_check &&
      detail::rotation_coin(state.rng_seed, now_tick) < params.p_new) {
    state.current = detail::fresh_record(state.rng_seed, now_tick, params);
    state.own_log.push_back(state.current);
  }
  prune(state, now_tick, params);
}

/// Appends a heard value. Duplicates are kept; dedup happens at match time.
inline void record_heard(DeviceState& state, const Token& stored_value,
                         std::uint64_t receipt_tick) {
  state.heard_log.push_back({stored_value, receipt_tick});
}

}  // namespace acd
