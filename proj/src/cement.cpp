#include "cml/cement.hpp"

#include <cmath>

namespace cml {

RowSoftmax row_log_softmax(std::span<const double> scores,
                           std::optional<std::pair<std::size_t, double>> margin_at) {
  const std::size_t n = scores.size();
  std::vector<double> effective(scores.begin(), scores.end());
  for (double s : effective)
    if (!std::isfinite(s)) throw NonFiniteError("non-finite score in softmax row");
  if (margin_at) {
    const auto [idx, margin] = *margin_at;
    if (idx >= n) throw IndexOutOfRangeError("margin index out of range");
    if (!std::isfinite(margin)) throw NonFiniteError("non-finite margin");
    if (margin != 0.0) effective[idx] += margin;
  }
  double max_v = effective[0];
  for (double s : effective)
    if (s > max_v) max_v = s;
  double z = 0.0;
  for (double s : effective) z += std::exp(s - max_v);
  const double log_z = max_v + std::log(z);
  RowSoftmax out;
  out.log_probs.resize(n);
  out.probs.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.log_probs[j] = effective[j] - log_z;
    out.probs[j] = std::exp(out.log_probs[j]);
  }
  return out;
}

DirectionalSoftmax softmax_rows(const Matrix& logits, const std::vector<double>& margins) {
  const std::size_t total = logits.rows;
  if (logits.cols != total) throw ShapeMismatchError("logit matrix must be square");
  if (!margins.empty() && margins.size() != total)
    throw ShapeMismatchError("margin vector must have length 2N");
  if (total % 2 != 0) throw ShapeMismatchError("logit matrix rows must be even");
  const std::size_t n_anchors = total / 2;
  DirectionalSoftmax out;
  out.probs = Matrix(total, total);
  out.diag_log.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::optional<std::pair<std::size_t, double>> margin_at;
    if (!margins.empty()) margin_at = {counterpart(i, n_anchors), margins[i]};
    RowSoftmax row = row_log_softmax(
        std::span<const double>(logits.row(i), total), margin_at);
    for (std::size_t j = 0; j < total; ++j) out.probs(i, j) = row.probs[j];
    out.diag_log[i] = row.log_probs[i];
  }
  return out;
}

double loss_from_logits(const Matrix& logits, const std::vector<double>& margins) {
  DirectionalSoftmax sm = softmax_rows(logits, margins);
  double acc = 0.0;
  for (double lp : sm.diag_log) acc += lp;
  return -acc / static_cast<double>(logits.rows);
}

LossReport loss_with_margins(const PairedBatch& batch, const std::vector<double>& margins) {
  const SimilarityMatrix s_v2t = similarity(batch, Direction::image_to_text);
  const SimilarityMatrix s_t2v = similarity(batch, Direction::text_to_image);
  const std::size_t total = batch.total_rows();
  LossReport report;
  report.recall_v2t.resize(total);
  report.recall_t2v.resize(total);
  const DirectionalSoftmax sm_v2t = softmax_rows(s_v2t.values, margins);
  const DirectionalSoftmax sm_t2v = softmax_rows(s_t2v.values, margins);
  double acc_v2t = 0.0;
  double acc_t2v = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    acc_v2t += sm_v2t.diag_log[i];
    acc_t2v += sm_t2v.diag_log[i];
    report.recall_v2t[i] = sm_v2t.probs(i, i);
    report.recall_t2v[i] = sm_t2v.probs(i, i);
  }
  report.loss_v2t = -acc_v2t / static_cast<double>(total);
  report.loss_t2v = -acc_t2v / static_cast<double>(total);
  report.total = report.loss_v2t + report.loss_t2v;
  return report;
}

namespace {

Matrix grad_from_probs(const Matrix& probs) {
  const std::size_t total = probs.rows;
  Matrix g(total, total);
  const double scale = 1.0 / static_cast<double>(total);
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = 0; j < total; ++j)
      g(i, j) = (probs(i, j) - (i == j ? 1.0 : 0.0)) * scale;
  return g;
}

}  // namespace

LossReport infonce_loss(const PairedBatch& batch) {
  return loss_with_margins(batch, {});
}

LossReport cement_loss(const PairedBatch& batch, const MarginConfig& cfg) {
  return loss_with_margins(batch, margin_vector(batch, cfg));
}

LogitGradients grad_logits(const PairedBatch& batch, const std::vector<double>& margins) {
  const SimilarityMatrix s_v2t = similarity(batch, Direction::image_to_text);
  const SimilarityMatrix s_t2v = similarity(batch, Direction::text_to_image);
  LogitGradients g;
  g.d_s_v2t = grad_from_probs(softmax_rows(s_v2t.values, margins).probs);
  g.d_s_t2v = grad_from_probs(softmax_rows(s_t2v.values, margins).probs);
  return g;
}

LogitGradients grad_logits(const PairedBatch& batch, const MarginConfig& cfg) {
  return grad_logits(batch, margin_vector(batch, cfg));
}

EmbeddingGradients grad_embeddings(const PairedBatch& batch,
                                   const std::vector<double>& margins) {
  if (!batch.image_embeds.normalized || !batch.text_embeds.normalized)
    throw NotNormalizedError("grad_embeddings requires normalized embeddings");
  const LogitGradients g = grad_logits(batch, margins);
  const Matrix& v = batch.image_embeds.values;
  const Matrix& t = batch.text_embeds.values;
  const std::size_t total = batch.total_rows();
  const std::size_t dim = v.cols;
  const double inv_tau = 1.0 / batch.temperature;

  // d_image = (G_v2t + G_t2v^T) * T / tau;  d_text = (G_t2v + G_v2t^T) * V / tau.
  EmbeddingGradients out;
  out.d_image = Matrix(total, dim);
  out.d_text = Matrix(total, dim);
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      double acc_img = 0.0;
      double acc_txt = 0.0;
      for (std::size_t j = 0; j < total; ++j) {
        acc_img += (g.d_s_v2t(i, j) + g.d_s_t2v(j, i)) * t(j, k);
        acc_txt += (g.d_s_t2v(i, j) + g.d_s_v2t(j, i)) * v(j, k);
      }
      out.d_image(i, k) = acc_img * inv_tau;
      out.d_text(i, k) = acc_txt * inv_tau;
    }
  }
  return out;
}

EmbeddingGradients grad_embeddings(const PairedBatch& batch, const MarginConfig& cfg) {
  return grad_embeddings(batch, margin_vector(batch, cfg));
}

}  // namespace cml
