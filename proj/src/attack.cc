#include "fedids/attack.h"

#include <cmath>
#include <string>

#include "fedids/error.h"

namespace fedids {

void ValidateAttack(const AttackSpec& spec) {
  if (spec.match_port < 0 || spec.match_port > 65535) {
    throw InputError("attack port " + std::to_string(spec.match_port) +
                     " outside [0, 65535]");
  }
  if (spec.decimals < 0 || spec.decimals > 15) {
    throw InputError("attack decimals must lie in [0, 15]");
  }
}

FlipOutcome ApplyLabelFlip(std::span<int> shard_labels,
                           std::span<const double> shard_ports,
                           const AttackSpec& spec, const ScalerParams* scaler,
                           std::size_t port_column) {
  ValidateAttack(spec);
  if (shard_labels.size() != shard_ports.size()) {
    throw ShapeError("attack shard labels and ports differ in length");
  }

  auto matches = [&spec](double port) {
    return port == static_cast<double>(spec.match_port);
  };
  double target = 0.0;
  double scale = 1.0;
  if (spec.mode == MatchMode::kScaledValue) {
    if (scaler == nullptr || !scaler->fitted()) {
      throw StateError("scaled port matching needs a fitted scaler");
    }
    if (port_column >= scaler->min.size()) {
      throw ShapeError("port column outside the scaler's range");
    }
    scale = std::pow(10.0, spec.decimals);
    target = std::round(
        scale * spec.scaled_value.value_or(TransformValue(
                    *scaler, port_column,
                    static_cast<double>(spec.match_port))));
  }

  FlipOutcome outcome;
  for (std::size_t i = 0; i < shard_labels.size(); ++i) {
    const bool hit = spec.mode == MatchMode::kRawPort
                         ? matches(shard_ports[i])
                         : std::round(scale * shard_ports[i]) == target;
    if (!hit) continue;
    ++outcome.matched;
    if (shard_labels[i] == 1) {
      shard_labels[i] = 0;
      ++outcome.changed;
    }
  }
  return outcome;
}

}  // namespace fedids
