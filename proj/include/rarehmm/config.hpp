#pragma once

#include "rarehmm/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rarehmm {

inline constexpr const char* kArtifactVersion = "1.0.0";

/// Parsed run configuration. All randomness in a run flows from
/// master_seed; there is no ambient entropy anywhere.
struct RunConfig {
  std::vector<std::string> states;
  std::vector<std::string> outputs;
  Matrix generator;
  Matrix channel;
  std::optional<double> p;
  std::vector<double> p_list;
  std::int64_t n = 1'000'000;
  int reps = 10;
  std::uint64_t seed = 1;
  std::optional<std::int64_t> block_len_override;  // overrides.L
  std::optional<std::int64_t> margin_override;     // overrides.K

  // Budget caps (config key "budgets", all optional).
  std::int64_t decode_n = 1'000'000;
  std::int64_t blocks = 10'000;
  std::int64_t bracket_terms = std::int64_t{1} << 24;
  std::int64_t rejection_attempts = 1'000'000;

  std::uint64_t config_hash = 0;

  // The single p for one-model commands; errors when only a multi-value
  // p_list was given.
  double single_p() const;
  // The p list for sweeps; falls back to the single p.
  std::vector<double> sweep_p_values() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

std::uint64_t hash_bytes(const void* data, std::size_t size);

}  // namespace rarehmm
