#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "acd/errors.hpp"

namespace acd {

/// How a receiver stores what it hears: the raw token, or the combined
/// hash binding both parties' current tokens.
enum class EncounterMode { raw, per_encounter };

/// What the registry keeps (and what medical reports carry): the plain
/// token list, or Bloom-filter reports merged into a chain.
enum class RegistryBackend { exact, bloom };

/// How devices learn about infected tokens: downloading snapshots and
/// matching locally, or sending heard tokens to a trusted server.
enum class QueryMode { public_snapshot, trusted_query };

struct ProtocolParams {
  double tick_duration_s = 60.0;
  std::uint64_t retention_ticks = 28800;
  std::uint64_t update_interval_r = 1440;
  double p_new = 1.0 / 30.0;
  std::uint32_t token_len_bits = 128;
  double p_fp = 1e-15;
  std::uint64_t initial_filter_bits_s = 262144;
  double growth_factor_alpha = 2.0;
  std::uint64_t growth_bound_g = 1000;
  std::uint64_t contagious_window_i = 28800;
  std::optional<double> rssi_threshold_dbm;
  EncounterMode encounter_mode = EncounterMode::raw;
  RegistryBackend registry_backend = RegistryBackend::exact;
  bool freshness_check = false;
  bool validity_check = false;
  QueryMode query_mode = QueryMode::public_snapshot;
};

/// Every violated invariant, one human-readable line per violation.
inline std::vector<std::string> check(const ProtocolParams& p) {
  std::vector<std::string> bad;
  auto fail = [&bad](const std::string& msg) { bad.push_back(msg); };

  if (!(p.tick_duration_s > 0.0)) fail("tick_duration_s out of range (need > 0)");
  if (!(p.p_new > 0.0 && p.p_new <= 1.0)) fail("p_new out of range (need 0 < p_new <= 1)");
  if (!(p.p_fp > 0.0 && p.p_fp < 1.0)) fail("p_fp out of range (need 0 < p_fp < 1)");
  if (!(p.growth_factor_alpha > 1.0)) fail("growth_factor_alpha out of range (need > 1)");
  if (p.token_len_bits < 64) fail("token_len_bits out of range (need >= 64)");
  if (p.token_len_bits > 256) fail("token_len_bits out of range (need <= 256, tokens are SHA-256 truncations)");
  if (p.contagious_window_i < 1) fail("contagious_window_i out of range (need >= 1)");
  if (p.retention_ticks < p.contagious_window_i) {
    fail("retention_ticks shorter than contagious_window_i (the diagnosis window must be coverable by the own-token log)");
  }
  if (p.update_interval_r < 1) fail("update_interval_r out of range (need >= 1)");
  if (p.initial_filter_bits_s < 64) fail("initial_filter_bits_s out of range (need >= 64)");
  if (p.growth_bound_g < 1) fail("growth_bound_g out of range (need >= 1)");
  if (p.freshness_check && p.validity_check) {
    fail("freshness_check and validity_check cannot both be on (no lambda-bit preimage exists for freshness tokens)");
  }
  return bad;
}

/// Returns the params unchanged iff all invariants hold; otherwise throws
/// with every violation listed.
inline ProtocolParams validate(const ProtocolParams& p) {
  auto bad = check(p);
  if (!bad.empty()) {
    std::string msg = "invalid protocol parameters:";
    for (const auto& b : bad) msg += "\n  - " + b;
    throw ValidationError(msg);
  }
  return p;
}

/// Hash count k = ceil(-log2(p_fp)).
inline std::uint32_t derive_k(double p_fp) {
  if (!(p_fp > 0.0 && p_fp < 1.0)) throw ValidationError("p_fp out of range (need 0 < p_fp < 1)");
  double k = std::ceil(-std::log2(p_fp));
  if (k < 1.0) k = 1.0;
  return static_cast<std::uint32_t>(k);
}

/// Filter size in bits keeping the designed false-positive probability for
/// n insertions: m = ceil(n * log2(1/p_fp) / ln 2). Monotone in n.
inline std::uint64_t optimal_bits(std::uint64_t n, double p_fp) {
  if (!(p_fp > 0.0 && p_fp < 1.0)) throw ValidationError("p_fp out of range (need 0 < p_fp < 1)");
  if (n == 0) return 0;
  const long double bits_per_elem =
      -std::log2(static_cast<long double>(p_fp)) / std::log(2.0L);
  return static_cast<std::uint64_t>(
      std::ceil(static_cast<long double>(n) * bits_per_elem));
}

/// Largest rotation probability keeping the expected token count over the
/// contagious window within the growth bound: min(1, g / i).
inline double max_p_new(std::uint64_t window_ticks, std::uint64_t growth_bound) {
  if (window_ticks < 1) throw ValidationError("contagious_window_i out of range (need >= 1)");
  if (growth_bound < 1) throw ValidationError("growth_bound_g out of range (need >= 1)");
  double p = static_cast<double>(growth_bound) / static_cast<double>(window_ticks);
  return p > 1.0 ? 1.0 : p;
}

// --- JSON config ---

inline std::string to_string(EncounterMode m) {
  return m == EncounterMode::raw ? "raw" : "per-encounter";
}
inline std::string to_string(RegistryBackend b) {
  return b == RegistryBackend::exact ? "raw-tokens" : "bloom";
}
inline std::string to_string(QueryMode q) {
  return q == QueryMode::public_snapshot ? "public-snapshot" : "trusted-query";
}

inline nlohmann::json params_to_json(const ProtocolParams& p) {
  nlohmann::json j{
      {"tick_duration_s", p.tick_duration_s},
      {"retention_ticks", p.retention_ticks},
      {"update_interval_r", p.update_interval_r},
      {"p_new", p.p_new},
      {"token_len_bits", p.token_len_bits},
      {"p_fp", p.p_fp},
      {"initial_filter_bits_s", p.initial_filter_bits_s},
      {"growth_factor_alpha", p.growth_factor_alpha},
      {"growth_bound_g", p.growth_bound_g},
      {"contagious_window_i", p.contagious_window_i},
      {"encounter_mode", to_string(p.encounter_mode)},
      {"upload_mode", to_string(p.registry_backend)},
      {"freshness_check", p.freshness_check},
      {"validity_check", p.validity_check},
      {"query_mode", to_string(p.query_mode)},
  };
  if (p.rssi_threshold_dbm) j["rssi_threshold_dbm"] = *p.rssi_threshold_dbm;
  return j;
}

/// Parses params from JSON. Unknown keys are an error so a typo cannot
/// silently fall back to a default. Missing keys keep their defaults.
inline ProtocolParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("params: expected a JSON object");
  static const std::set<std::string> known = {
      "tick_duration_s",   "retention_ticks", "update_interval_r",
      "p_new",             "token_len_bits",  "p_fp",
      "initial_filter_bits_s", "growth_factor_alpha", "growth_bound_g",
      "contagious_window_i", "rssi_threshold_dbm", "encounter_mode",
      "upload_mode",       "freshness_check", "validity_check",
      "query_mode"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (known.find(it.key()) == known.end()) {
      throw ValidationError("params: unknown key '" + it.key() + "'");
    }
  }

  ProtocolParams p;
  auto num = [&j](const char* key, double& out) {
    if (j.contains(key)) {
      if (!j[key].is_number()) throw ValidationError(std::string("params: '") + key + "' must be a number");
      out = j[key].get<double>();
    }
  };
  auto uint = [&j](const char* key, auto& out) {
    if (j.contains(key)) {
      if (!j[key].is_number_unsigned()) throw ValidationError(std::string("params: '") + key + "' must be a non-negative integer");
      out = j[key].get<std::decay_t<decltype(out)>>();
    }
  };
  auto boolean = [&j](const char* key, bool& out) {
    if (j.contains(key)) {
      if (!j[key].is_boolean()) throw ValidationError(std::string("params: '") + key + "' must be a boolean");
      out = j[key].get<bool>();
    }
  };

  num("tick_duration_s", p.tick_duration_s);
  uint("retention_ticks", p.retention_ticks);
  uint("update_interval_r", p.update_interval_r);
  num("p_new", p.p_new);
  uint("token_len_bits", p.token_len_bits);
  num("p_fp", p.p_fp);
  uint("initial_filter_bits_s", p.initial_filter_bits_s);
  num("growth_factor_alpha", p.growth_factor_alpha);
  uint("growth_bound_g", p.growth_bound_g);
  uint("contagious_window_i", p.contagious_window_i);
  if (j.contains("rssi_threshold_dbm")) {
    if (j["rssi_threshold_dbm"].is_null()) {
      p.rssi_threshold_dbm.reset();
    } else if (j["rssi_threshold_dbm"].is_number()) {
      p.rssi_threshold_dbm = j["rssi_threshold_dbm"].get<double>();
    } else {
      throw ValidationError("params: 'rssi_threshold_dbm' must be a number or null");
    }
  }
  if (j.contains("encounter_mode")) {
    auto s = j["encounter_mode"].get<std::string>();
    if (s == "raw") p.encounter_mode = EncounterMode::raw;
    else if (s == "per-encounter") p.encounter_mode = EncounterMode::per_encounter;
    else throw ValidationError("params: 'encounter_mode' must be \"raw\" or \"per-encounter\"");
  }
  if (j.contains("upload_mode")) {
    auto s = j["upload_mode"].get<std::string>();
    if (s == "raw-tokens") p.registry_backend = RegistryBackend::exact;
    else if (s == "bloom") p.registry_backend = RegistryBackend::bloom;
    else throw ValidationError("params: 'upload_mode' must be \"raw-tokens\" or \"bloom\"");
  }
  boolean("freshness_check", p.freshness_check);
  boolean("validity_check", p.validity_check);
  if (j.contains("query_mode")) {
    auto s = j["query_mode"].get<std::string>();
    if (s == "public-snapshot") p.query_mode = QueryMode::public_snapshot;
    else if (s == "trusted-query") p.query_mode = QueryMode::trusted_query;
    else throw ValidationError("params: 'query_mode' must be \"public-snapshot\" or \"trusted-query\"");
  }
  return p;
}

inline ProtocolParams load_params_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open params file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("params parse error: ") + e.what());
  }
  return validate(params_from_json(j));
}

}  // namespace acd
