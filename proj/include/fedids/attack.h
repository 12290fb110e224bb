#ifndef FEDIDS_ATTACK_H_
#define FEDIDS_ATTACK_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "fedids/preprocess.h"

namespace fedids {

enum class MatchMode {
  // Compare the unscaled port column against match_port.
  kRawPort,
  // Compare min-max scaled values after rounding to `decimals` places.
  kScaledValue,
};

struct AttackSpec {
  std::size_t target_client = 0;
  std::int64_t match_port = 23;
  MatchMode mode = MatchMode::kRawPort;
  // kScaledValue only: the scaled constant to match. When unset it is the
  // scaler's image of match_port.
  std::optional<double> scaled_value;
  int decimals = 6;
  std::string feature = "tcp_srcport";
};

// Throws InputError for an out-of-range port or negative decimals.
void ValidateAttack(const AttackSpec& spec);

struct FlipOutcome {
  // Rows whose port matched, whatever their label.
  std::size_t matched = 0;
  // Rows whose label actually went from 1 to 0.
  std::size_t changed = 0;

  friend bool operator==(const FlipOutcome&, const FlipOutcome&) = default;
};

// Sets the label of every matching row of one client's shard to 0.
// `shard_ports` holds the shard's port column, raw for kRawPort and scaled
// for kScaledValue. `port_column` locates that column in `scaler`.
// Throws StateError in kScaledValue mode without a fitted scaler.
FlipOutcome ApplyLabelFlip(std::span<int> shard_labels,
                           std::span<const double> shard_ports,
                           const AttackSpec& spec,
                           const ScalerParams* scaler = nullptr,
                           std::size_t port_column = 0);

}  // namespace fedids

#endif  // FEDIDS_ATTACK_H_
