#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cml/margin.hpp"
#include "cml/simcore.hpp"

namespace cml {

// Per-batch loss summary. recall_* hold the diagonal probabilities p_{i,i}
// of each direction's full softmax rows.
struct LossReport {
  double loss_v2t = 0.0;
  double loss_t2v = 0.0;
  double total = 0.0;
  std::vector<double> recall_v2t;
  std::vector<double> recall_t2v;
};

// dL/ds per direction, scaled by 1/(2N). Every row sums to zero.
struct LogitGradients {
  Matrix d_s_v2t;
  Matrix d_s_t2v;
};

struct RowSoftmax {
  std::vector<double> log_probs;
  std::vector<double> probs;
};

// Stabilized softmax over one row of scores. margin_at, when set, adds the
// given margin to the designated entry before the max-subtraction, so the
// stabilization sees the effective logits. A margin of exactly 0.0 is not
// added at all, keeping the arithmetic bit-identical to the margin-free path.
RowSoftmax row_log_softmax(std::span<const double> scores,
                           std::optional<std::pair<std::size_t, double>> margin_at);

// Softmax rows of a full 2N x 2N logit matrix. margins may be empty (no
// injection) or length 2N; margins[i] lands on entry (i, counterpart(i)).
struct DirectionalSoftmax {
  Matrix probs;                   // p_{i,j}
  std::vector<double> diag_log;   // log p_{i,i}
};
DirectionalSoftmax softmax_rows(const Matrix& logits,
                                const std::vector<double>& margins);

// Loss of one direction given its logit matrix: -(1/2N) sum_i log p_{i,i}.
double loss_from_logits(const Matrix& logits, const std::vector<double>& margins);

// Contrastive loss over the full doubled batch, both directions.
LossReport infonce_loss(const PairedBatch& batch);

// Margin-injected variant: the entry (i, i') of each directional partition
// gets margins[i] added inside the partition function; the diagonal positive
// term never receives a margin. Reduces to infonce_loss at zero margins.
LossReport cement_loss(const PairedBatch& batch, const MarginConfig& cfg);

// Core entry point: empty margins mean no injection at all.
LossReport loss_with_margins(const PairedBatch& batch,
                             const std::vector<double>& margins);

// Analytic gradients w.r.t. the similarity logits of each direction:
// d/ds_{i,i} = -(1 - p_{i,i}), d/ds_{i,j} = p_{i,j}, scaled by 1/(2N),
// with probabilities taken from the margin-injected partition.
LogitGradients grad_logits(const PairedBatch& batch, const MarginConfig& cfg);
LogitGradients grad_logits(const PairedBatch& batch,
                           const std::vector<double>& margins);

// Gradients of the total loss w.r.t. the post-normalization embedding rows,
// composed from both directional logit gradients via the 1/tau chain factor.
struct EmbeddingGradients {
  Matrix d_image;
  Matrix d_text;
};
EmbeddingGradients grad_embeddings(const PairedBatch& batch, const MarginConfig& cfg);
EmbeddingGradients grad_embeddings(const PairedBatch& batch,
                                   const std::vector<double>& margins);

}  // namespace cml
