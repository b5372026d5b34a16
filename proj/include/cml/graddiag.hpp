#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cml/cement.hpp"

namespace cml {

// Three-way split of the per-row softmax probability mass, averaged over
// rows: the positive pull 1-p_{i,i} balances the hard-negative mass p_{i,i'}
// plus the easy-negative mass exactly (zero-sum).
struct GradientReport {
  std::size_t step = 0;
  double positive_pull = 0.0;
  double hard_reject = 0.0;
  double easy_reject = 0.0;
  double hard_share = 0.0;  // hard_reject / positive_pull
  // Gradient-times-logit magnitudes, mean over rows.
  double positive_weighted = 0.0;
  double hard_weighted = 0.0;
  double easy_weighted = 0.0;
};

// Decomposition of a single direction's logit matrix under the given margins.
GradientReport decompose_logits(const Matrix& logits, const std::vector<double>& margins);

// Decomposition of a real batch, averaged over both directions. Empty margins
// mean no injection.
GradientReport decompose(const PairedBatch& batch, const MarginConfig& cfg);
GradientReport decompose(const PairedBatch& batch, const std::vector<double>& margins);

// Sampling distributions for synthetic logit matrices: the diagonal sits at a
// fixed baseline, the hard-negative entry at diagonal - N(hard_gap), every
// easy entry at diagonal - N(easy_gap). Concreteness (for adaptive/inverse
// margin modes) is uniform in [c_min, c_max].
struct LogitGapConfig {
  double diagonal = 10.0;
  double hard_gap_mean = 2.0;
  double hard_gap_std = 0.5;
  double easy_gap_mean = 8.0;
  double easy_gap_std = 1.0;
  double c_min = 1.0;
  double c_max = 5.0;
};

void validate_gap_config(const LogitGapConfig& cfg);

// Synthesizes one 2N x 2N logit matrix from the gap distributions.
// Deterministic under seed.
Matrix synth_logits(std::size_t n_anchors, const LogitGapConfig& cfg, std::uint64_t seed);

struct SweepPoint {
  std::size_t n_anchors = 0;
  GradientReport report;
};

// Decomposition across batch sizes; point k derives its seed as seed + k.
std::vector<SweepPoint> batch_sweep(const LogitGapConfig& gap_cfg,
                                    const std::vector<std::size_t>& sizes,
                                    const MarginConfig& margin_cfg,
                                    std::uint64_t seed);

}  // namespace cml
