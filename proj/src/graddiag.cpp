#include "cml/graddiag.hpp"

#include <cmath>
#include <random>

namespace cml {

namespace {

struct ComponentSums {
  double positive = 0.0;
  double hard = 0.0;
  double easy = 0.0;
  double positive_w = 0.0;
  double hard_w = 0.0;
  double easy_w = 0.0;
  std::size_t rows = 0;
};

void accumulate(const Matrix& logits, const std::vector<double>& margins,
                ComponentSums& sums) {
  const DirectionalSoftmax sm = softmax_rows(logits, margins);
  const std::size_t total = logits.rows;
  const std::size_t n_anchors = total / 2;
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t ic = counterpart(i, n_anchors);
    const double p_pos = sm.probs(i, i);
    const double p_hard = sm.probs(i, ic);
    double p_easy = 0.0;
    double easy_weighted = 0.0;
    for (std::size_t j = 0; j < total; ++j) {
      if (j == i || j == ic) continue;
      p_easy += sm.probs(i, j);
      easy_weighted += sm.probs(i, j) * logits(i, j);
    }
    sums.positive += 1.0 - p_pos;
    sums.hard += p_hard;
    sums.easy += p_easy;
    sums.positive_w += std::abs((1.0 - p_pos) * logits(i, i));
    sums.hard_w += std::abs(p_hard * logits(i, ic));
    sums.easy_w += std::abs(easy_weighted);
  }
  sums.rows += total;
}

GradientReport finish(const ComponentSums& sums) {
  GradientReport report;
  const double n = static_cast<double>(sums.rows);
  report.positive_pull = sums.positive / n;
  report.hard_reject = sums.hard / n;
  report.easy_reject = sums.easy / n;
  report.hard_share = report.hard_reject / report.positive_pull;
  report.positive_weighted = sums.positive_w / n;
  report.hard_weighted = sums.hard_w / n;
  report.easy_weighted = sums.easy_w / n;
  return report;
}

}  // namespace

GradientReport decompose_logits(const Matrix& logits, const std::vector<double>& margins) {
  ComponentSums sums;
  accumulate(logits, margins, sums);
  return finish(sums);
}

GradientReport decompose(const PairedBatch& batch, const std::vector<double>& margins) {
  const SimilarityMatrix s_v2t = similarity(batch, Direction::image_to_text);
  const SimilarityMatrix s_t2v = similarity(batch, Direction::text_to_image);
  ComponentSums sums;
  accumulate(s_v2t.values, margins, sums);
  accumulate(s_t2v.values, margins, sums);
  return finish(sums);
}

GradientReport decompose(const PairedBatch& batch, const MarginConfig& cfg) {
  return decompose(batch, margin_vector(batch, cfg));
}

void validate_gap_config(const LogitGapConfig& cfg) {
  if (cfg.hard_gap_std < 0.0 || cfg.easy_gap_std < 0.0)
    throw InvalidConfigError("gap stddevs must be nonnegative");
  if (!(cfg.c_min <= cfg.c_max))
    throw InvalidConfigError("concreteness range must satisfy c_min <= c_max");
  if (!std::isfinite(cfg.diagonal))
    throw InvalidConfigError("diagonal baseline must be finite");
}

Matrix synth_logits(std::size_t n_anchors, const LogitGapConfig& cfg, std::uint64_t seed) {
  validate_gap_config(cfg);
  if (n_anchors < 1) throw InvalidConfigError("need at least one anchor");
  const std::size_t total = 2 * n_anchors;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> hard_gap(cfg.hard_gap_mean, cfg.hard_gap_std);
  std::normal_distribution<double> easy_gap(cfg.easy_gap_mean, cfg.easy_gap_std);
  Matrix logits(total, total);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t ic = counterpart(i, n_anchors);
    logits(i, i) = cfg.diagonal;
    logits(i, ic) = cfg.diagonal - hard_gap(rng);
    for (std::size_t j = 0; j < total; ++j) {
      if (j == i || j == ic) continue;
      logits(i, j) = cfg.diagonal - easy_gap(rng);
    }
  }
  return logits;
}

std::vector<SweepPoint> batch_sweep(const LogitGapConfig& gap_cfg,
                                    const std::vector<std::size_t>& sizes,
                                    const MarginConfig& margin_cfg,
                                    std::uint64_t seed) {
  validate_gap_config(gap_cfg);
  validate_margin_config(margin_cfg);
  if (sizes.empty()) throw InvalidConfigError("sizes must be nonempty");
  std::vector<SweepPoint> points;
  points.reserve(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const std::size_t n = sizes[k];
    const std::uint64_t point_seed = seed + k;
    const Matrix logits = synth_logits(n, gap_cfg, point_seed);
    std::vector<double> concreteness(2 * n, 0.0);
    std::mt19937_64 rng(point_seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> conc(gap_cfg.c_min, gap_cfg.c_max);
    for (std::size_t i = 0; i < n; ++i) {
      concreteness[i] = conc(rng);
      concreteness[i + n] = concreteness[i];
    }
    SweepPoint point;
    point.n_anchors = n;
    point.report = decompose_logits(logits, margin_vector(concreteness, margin_cfg));
    point.report.step = k;
    points.push_back(std::move(point));
  }
  return points;
}

}  // namespace cml
