#include "oshield/shield.hpp"

namespace oshield {

Shield make_shield(const TaskValuation& valuation, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw DeltaOutOfRange("delta must lie in [0, 1], got " + std::to_string(delta));
  }
  if (valuation.tasks.empty()) throw std::invalid_argument("cannot build a shield from an empty valuation");
  Shield shield;
  shield.delta = delta;
  shield.valuation = valuation;
  for (std::size_t i = 0; i < valuation.tasks.size(); ++i) {
    // Exact comparison: ties are admitted, and every argmin task satisfies
    // delta * optimal <= optimal for delta <= 1.
    if (delta * valuation.values[i] <= valuation.optimal) shield.allowed.push_back(valuation.tasks[i]);
  }
  return shield;
}

RiskBand risk_band(double value) {
  if (value <= 0.0) return RiskBand::Green;
  if (value <= 1.0 / 3.0) return RiskBand::Yellow;
  if (value <= 2.0 / 3.0) return RiskBand::Orange;
  return RiskBand::Red;
}

std::map<TaskId, RiskBand> risk_bands(const TaskValuation& valuation) {
  std::map<TaskId, RiskBand> out;
  for (std::size_t i = 0; i < valuation.tasks.size(); ++i) out.emplace(valuation.tasks[i], risk_band(valuation.values[i]));
  return out;
}

std::string_view to_string(RiskBand band) {
  switch (band) {
    case RiskBand::Green: return "green";
    case RiskBand::Yellow: return "yellow";
    case RiskBand::Orange: return "orange";
    case RiskBand::Red: return "red";
  }
  return "red";
}

}  // namespace oshield
