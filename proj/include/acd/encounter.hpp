#pragma once

#include <cstdint>
#include <optional>

#include "acd/errors.hpp"
#include "acd/hash.hpp"
#include "acd/params.hpp"
#include "acd/token.hpp"
#include "acd/token_engine.hpp"

namespace acd {

/// What actually goes on the air. Outside freshness mode this is just the
/// current token; in freshness mode the token is H(nonce || tick || loc)
/// and the carried fields let the receiver verify it on the spot.
struct BroadcastMessage {
  Token token;
  std::optional<std::uint64_t> epoch_index;
  std::optional<std::uint64_t> loc_bucket;
  std::optional<Token> nonce;
};

struct ReceptionEvent {
  BroadcastMessage message;
  double rssi_dbm = 0.0;
  std::uint64_t tick = 0;
  std::uint64_t receiver_loc_bucket = 0;
};

enum class FreshnessVerdict { ok, malformed, stale, wrong_location, bad_hash };

inline Token freshness_token(const Token& nonce, std::uint64_t epoch_index,
                             std::uint64_t loc_bucket, std::uint32_t lambda) {
  Sha256 h;
  h.update(nonce.bytes());
  h.update_u64(epoch_index);
  h.update_u64(loc_bucket);
  return Token::from_digest(h.finish(), lambda);
}

/// Builds this tick's broadcast. In freshness mode a fresh nonce is bound
/// to (tick, loc) and the resulting per-tick token is appended to the own
/// log (it is what receivers will store and what a diagnosis uploads).
inline BroadcastMessage make_broadcast(DeviceState& state, std::uint64_t tick,
                                       std::uint64_t loc_bucket,
                                       const ProtocolParams& params) {
  BroadcastMessage msg;
  if (!params.freshness_check) {
    msg.token = state.current.token;
    return msg;
  }
  const Token nonce =
      detail::device_material(state.rng_seed, tick, 'N', params.token_len_bits);
  msg.token = freshness_token(nonce, tick, loc_bucket, params.token_len_bits);
  msg.epoch_index = tick;
  msg.loc_bucket = loc_bucket;
  msg.nonce = nonce;
  if (state.own_log.empty() || state.own_log.back().epoch_tick != tick ||
      !(state.own_log.back().token == msg.token)) {
    state.own_log.push_back({msg.token, tick, std::nullopt});
  }
  state.current = {msg.token, tick, std::nullopt};
  return msg;
}

/// Pure reception gate: accept iff the signal is at least as strong as the
/// threshold; with no threshold configured everything passes.
inline bool accept_rssi(const ReceptionEvent& event,
                        std::optional<double> threshold_dbm) {
  if (!threshold_dbm) return true;
  return event.rssi_dbm >= *threshold_dbm;
}

/// Checks a freshness-tagged message: the stamped epoch must be within
/// tick_tolerance of the local clock, the location bucket must match, and
/// the hash must recompute. The carried nonce/epoch/loc are verification
/// inputs only; nothing but the token may be stored afterwards.
inline FreshnessVerdict verify_freshness(const ReceptionEvent& event,
                                         std::uint64_t local_tick,
                                         std::uint64_t tick_tolerance,
                                         const ProtocolParams& params) {
  if (!params.freshness_check) {
    throw ModeError("verify_freshness called with freshness_check off");
  }
  const auto& msg = event.message;
  if (!msg.epoch_index || !msg.loc_bucket || !msg.nonce) {
    return FreshnessVerdict::malformed;
  }
  const std::uint64_t delta = *msg.epoch_index > local_tick
                                  ? *msg.epoch_index - local_tick
                                  : local_tick - *msg.epoch_index;
  if (delta > tick_tolerance) return FreshnessVerdict::stale;
  if (*msg.loc_bucket != event.receiver_loc_bucket) {
    return FreshnessVerdict::wrong_location;
  }
  const Token expect = freshness_token(*msg.nonce, *msg.epoch_index,
                                       *msg.loc_bucket, msg.token.bits());
  if (!(expect == msg.token)) return FreshnessVerdict::bad_hash;
  return FreshnessVerdict::ok;
}

/// Symmetric per-encounter value: H(min(a,b) || max(a,b)) truncated to
/// lambda bits, with lexicographic (unsigned big-endian) token order.
inline Token combine(const Token& t_a, const Token& t_b) {
  if (t_a.bits() != t_b.bits()) {
    throw Error("combine: mismatched token widths");
  }
  const Token& lo = t_b < t_a ? t_b : t_a;
  const Token& hi = t_b < t_a ? t_a : t_b;
  Sha256 h;
  h.update(lo.bytes());
  h.update(hi.bytes());
  return Token::from_digest(h.finish(), t_a.bits());
}

/// Stores a received (already gated) broadcast: the raw token, or in
/// per-encounter mode the combined hash binding both parties' tokens.
inline void record_encounter(DeviceState& receiver, const ReceptionEvent& event,
                             const ProtocolParams& params) {
  if (params.encounter_mode == EncounterMode::raw) {
    record_heard(receiver, event.message.token, event.tick);
  } else {
    record_heard(receiver, combine(receiver.current.token, event.message.token),
                 event.tick);
  }
}

}  // namespace acd
