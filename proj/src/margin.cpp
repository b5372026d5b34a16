#include "cml/margin.hpp"

#include <cmath>

namespace cml {

namespace {
constexpr double kMissingConcreteness = 3.0;  // midpoint of the 1-5 rating scale
}

void validate_margin_config(const MarginConfig& cfg) {
  if (!(cfg.m_min <= cfg.m_max))
    throw InvalidConfigError("margin bounds must satisfy m_min <= m_max");
  if (!(cfg.tau_m > 0.0)) throw InvalidConfigError("tau_m must be positive");
}

double adaptive_margin(double c, const MarginConfig& cfg) {
  return (cfg.m_max - cfg.m_min) / (1.0 + std::exp((cfg.c_tilde - c) / cfg.tau_m)) +
         cfg.m_min;
}

double inverse_margin(double c, const MarginConfig& cfg) {
  return (cfg.m_max - cfg.m_min) / (1.0 + std::exp((c - cfg.c_tilde) / cfg.tau_m)) +
         cfg.m_min;
}

std::vector<double> margin_vector(const std::vector<double>& concreteness,
                                  const MarginConfig& cfg) {
  validate_margin_config(cfg);
  std::vector<double> margins(concreteness.size(), 0.0);
  for (std::size_t i = 0; i < concreteness.size(); ++i) {
    double c = concreteness[i];
    if (!std::isfinite(c)) c = kMissingConcreteness;
    switch (cfg.mode) {
      case MarginMode::adaptive: margins[i] = adaptive_margin(c, cfg); break;
      case MarginMode::inverse: margins[i] = inverse_margin(c, cfg); break;
      case MarginMode::constant: margins[i] = cfg.static_value; break;
      case MarginMode::zero: margins[i] = 0.0; break;
    }
  }
  return margins;
}

std::vector<double> margin_vector(const PairedBatch& batch, const MarginConfig& cfg) {
  return margin_vector(batch.concreteness, cfg);
}

}  // namespace cml
