#pragma once

#include <vector>

#include "cml/simcore.hpp"

namespace cml {

enum class MarginMode { adaptive, inverse, constant, zero };

// Margin schedule parameters. The adaptive schedule is a logistic in the
// concreteness rating with threshold c_tilde and steepness tau_m, bounded by
// [m_min, m_max]; the inverse schedule is its reflection around c_tilde.
struct MarginConfig {
  double m_min = -2.0;
  double m_max = 2.0;
  double c_tilde = 4.0;
  double tau_m = 0.15;
  MarginMode mode = MarginMode::adaptive;
  double static_value = 1.0;  // used by MarginMode::constant
};

void validate_margin_config(const MarginConfig& cfg);

// (m_max - m_min) / (1 + exp((c_tilde - c)/tau_m)) + m_min.
// Total on reals; saturates to the bounds for extreme c.
double adaptive_margin(double c, const MarginConfig& cfg);

// Reflected schedule: inverse_margin(c) == adaptive_margin(2*c_tilde - c).
double inverse_margin(double c, const MarginConfig& cfg);

// Applies the configured schedule to each concreteness entry. Non-finite
// ratings (keyword missing from the lexicon) map to the neutral sentinel 3.0
// before the schedule.
std::vector<double> margin_vector(const PairedBatch& batch, const MarginConfig& cfg);

// Same, over an arbitrary concreteness vector.
std::vector<double> margin_vector(const std::vector<double>& concreteness,
                                  const MarginConfig& cfg);

}  // namespace cml
