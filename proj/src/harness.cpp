#include "cml/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"

namespace cml {

void validate_toy_config(const ToyDatasetConfig& cfg) {
  if (cfg.vocab_object1 < 2 || cfg.vocab_attribute < 2 || cfg.vocab_relation < 2 ||
      cfg.vocab_object2 < 2)
    throw InvalidConfigError("every slot vocabulary needs at least two items");
  if (cfg.scenes < 1) throw InvalidConfigError("need at least one scene");
  if (cfg.latent_dim < 2) throw InvalidConfigError("latent_dim must be >= 2");
  if (cfg.noise_std < 0.0) throw InvalidConfigError("noise stddev must be >= 0");
  if (!(cfg.c_min <= cfg.c_max)) throw InvalidConfigError("c_min must be <= c_max");
}

double rescale_concreteness(double d, double d_min, double d_max, double c_min,
                            double c_max) {
  if (d_max <= d_min) return c_min;
  return c_min + (c_max - c_min) * (d - d_min) / (d_max - d_min);
}

namespace {

// Random orthogonal matrix via modified Gram-Schmidt on a Gaussian draw.
Matrix random_rotation(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix q(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = gauss(rng);
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += v[k] * q(j, k);
      for (std::size_t k = 0; k < n; ++k) v[k] -= dot * q(j, k);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < n; ++k) q(i, k) = v[k] / norm;
  }
  // Rows are orthonormal; use as the rotation directly.
  return q;
}

std::vector<double> mix_columns(const Matrix& columns, const std::vector<int>& items) {
  std::vector<double> x(columns.rows, 0.0);
  for (int item : items)
    for (std::size_t k = 0; k < columns.rows; ++k)
      x[k] += columns(k, static_cast<std::size_t>(item));
  return x;
}

std::vector<double> rotate(const Matrix& rot, const std::vector<double>& x) {
  std::vector<double> y(rot.rows, 0.0);
  for (std::size_t i = 0; i < rot.rows; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < rot.cols; ++k) acc += rot(i, k) * x[k];
    y[i] = acc;
  }
  return y;
}

}  // namespace

ToyDataset synth_dataset(const ToyDatasetConfig& cfg) {
  validate_toy_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::vector<int> vocab_sizes = {cfg.vocab_object1, cfg.vocab_attribute,
                                        cfg.vocab_relation, cfg.vocab_object2};
  std::vector<int> offsets(4, 0);
  int total_vocab = 0;
  for (int s = 0; s < 4; ++s) {
    offsets[static_cast<std::size_t>(s)] = total_vocab;
    total_vocab += vocab_sizes[static_cast<std::size_t>(s)];
  }

  ToyDataset data;
  data.config = cfg;
  data.item_columns =
      Matrix(static_cast<std::size_t>(cfg.latent_dim), static_cast<std::size_t>(total_vocab));
  const double column_scale = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
  for (auto& v : data.item_columns.data) v = gauss(rng) * column_scale;
  data.rotation = random_rotation(static_cast<std::size_t>(cfg.latent_dim), rng);

  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  std::uniform_int_distribution<int> slot_pick(0, 3);

  data.pairs.resize(static_cast<std::size_t>(cfg.scenes));
  for (auto& pair : data.pairs) {
    std::vector<int> items(4);
    for (int s = 0; s < 4; ++s) {
      std::uniform_int_distribution<int> item_pick(0, vocab_sizes[static_cast<std::size_t>(s)] - 1);
      items[static_cast<std::size_t>(s)] =
          offsets[static_cast<std::size_t>(s)] + item_pick(rng);
    }
    const int slot = slot_pick(rng);
    std::uniform_int_distribution<int> alt_pick(0, vocab_sizes[static_cast<std::size_t>(slot)] - 2);
    int alt = offsets[static_cast<std::size_t>(slot)] + alt_pick(rng);
    if (alt >= items[static_cast<std::size_t>(slot)]) ++alt;  // skip the original item
    std::vector<int> flipped = items;
    flipped[static_cast<std::size_t>(slot)] = alt;

    const std::vector<double> clean = mix_columns(data.item_columns, items);
    const std::vector<double> clean_neg = mix_columns(data.item_columns, flipped);

    pair.image = clean;
    pair.negative_image = clean_neg;
    if (cfg.noise_std > 0.0) {
      for (auto& v : pair.image) v += noise(rng);
      for (auto& v : pair.negative_image) v += noise(rng);
    }
    pair.text = rotate(data.rotation, clean);
    pair.negative_text = rotate(data.rotation, clean_neg);

    double sq = 0.0;
    const int old_item = items[static_cast<std::size_t>(slot)];
    for (std::size_t k = 0; k < data.item_columns.rows; ++k) {
      const double diff = data.item_columns(k, static_cast<std::size_t>(old_item)) -
                          data.item_columns(k, static_cast<std::size_t>(alt));
      sq += diff * diff;
    }
    pair.displacement = std::sqrt(sq);
  }

  double d_min = data.pairs.front().displacement;
  double d_max = d_min;
  for (const auto& pair : data.pairs) {
    d_min = std::min(d_min, pair.displacement);
    d_max = std::max(d_max, pair.displacement);
  }
  for (auto& pair : data.pairs)
    pair.concreteness =
        rescale_concreteness(pair.displacement, d_min, d_max, cfg.c_min, cfg.c_max);
  return data;
}

EncoderParams generating_encoders(const ToyDataset& data) {
  const std::size_t n = static_cast<std::size_t>(data.config.latent_dim);
  EncoderParams params;
  params.w_image = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) params.w_image(i, i) = 1.0;
  params.w_text = transpose(data.rotation);
  return params;
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.batch < 1) throw InvalidConfigError("batch must be >= 1");
  if (cfg.epochs < 0) throw InvalidConfigError("epochs must be >= 0");
  if (!(cfg.learning_rate >= 0.0)) throw InvalidConfigError("learning rate must be >= 0");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw InvalidConfigError("momentum must lie in [0, 1)");
  if (!(cfg.temperature > 0.0)) throw InvalidConfigError("temperature must be positive");
  validate_margin_config(cfg.margin);
}

namespace {

struct Forward {
  PairedBatch batch;
  Matrix raw_image;   // 2N x latent
  Matrix raw_text;
  Matrix pre_image;   // 2N x embed, before normalization
  Matrix pre_text;
  std::vector<double> norm_image;
  std::vector<double> norm_text;
};

Matrix apply_encoder(const Matrix& raw, const Matrix& w) {
  // rows of raw are inputs; output row r = W x_r.
  Matrix out(raw.rows, w.rows);
  for (std::size_t r = 0; r < raw.rows; ++r)
    for (std::size_t i = 0; i < w.rows; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < w.cols; ++k) acc += w(i, k) * raw(r, k);
      out(r, i) = acc;
    }
  return out;
}

EmbeddingMatrix normalize_with_norms(const Matrix& pre, std::vector<double>& norms) {
  EmbeddingMatrix out;
  out.values = pre;
  norms.assign(pre.rows, 0.0);
  for (std::size_t r = 0; r < pre.rows; ++r) {
    double sq = 0.0;
    for (std::size_t j = 0; j < pre.cols; ++j) sq += pre(r, j) * pre(r, j);
    const double norm = std::sqrt(sq);
    if (norm <= 1e-12) throw ZeroRowError(r);
    norms[r] = norm;
    for (std::size_t j = 0; j < pre.cols; ++j) out.values(r, j) /= norm;
  }
  out.normalized = true;
  return out;
}

Forward forward_batch(const ToyDataset& data, const std::vector<std::size_t>& indices,
                      const EncoderParams& params, const TrainConfig& cfg) {
  const std::size_t n = indices.size();
  const std::size_t latent = static_cast<std::size_t>(data.config.latent_dim);
  Forward fwd;
  fwd.raw_image = Matrix(2 * n, latent);
  fwd.raw_text = Matrix(2 * n, latent);
  std::vector<double> concreteness(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ToyPair& pair = data.pairs[indices[i]];
    for (std::size_t k = 0; k < latent; ++k) {
      fwd.raw_image(i, k) = pair.image[k];
      fwd.raw_image(i + n, k) = pair.negative_image[k];
      fwd.raw_text(i, k) = pair.text[k];
      fwd.raw_text(i + n, k) = pair.negative_text[k];
    }
    concreteness[i] = pair.concreteness;
  }
  fwd.pre_image = apply_encoder(fwd.raw_image, params.w_image);
  fwd.pre_text = apply_encoder(fwd.raw_text, params.w_text);
  EmbeddingMatrix image = normalize_with_norms(fwd.pre_image, fwd.norm_image);
  EmbeddingMatrix text = normalize_with_norms(fwd.pre_text, fwd.norm_text);
  fwd.batch = make_paired_batch(std::move(image), std::move(text), cfg.temperature,
                                std::move(concreteness));
  return fwd;
}

std::vector<double> margins_for(const PairedBatch& batch, const TrainConfig& cfg) {
  if (cfg.loss == LossKind::infonce) return {};
  return margin_vector(batch, cfg.margin);
}

// Chain through u = e/|e|: g_e = (g_u - (g_u . u) u) / |e|, then dW = g_e x^T.
Matrix encoder_gradient(const Matrix& raw, const Matrix& unit, const Matrix& d_unit,
                        const std::vector<double>& norms, std::size_t embed,
                        std::size_t latent) {
  Matrix d_w(embed, latent);
  for (std::size_t r = 0; r < raw.rows; ++r) {
    double dot = 0.0;
    for (std::size_t j = 0; j < embed; ++j) dot += d_unit(r, j) * unit(r, j);
    for (std::size_t j = 0; j < embed; ++j) {
      const double g_e = (d_unit(r, j) - dot * unit(r, j)) / norms[r];
      for (std::size_t k = 0; k < latent; ++k) d_w(j, k) += g_e * raw(r, k);
    }
  }
  return d_w;
}

}  // namespace

BatchGradients batch_gradients(const ToyDataset& data,
                               const std::vector<std::size_t>& indices,
                               const EncoderParams& params, const TrainConfig& cfg) {
  validate_train_config(cfg);
  const Forward fwd = forward_batch(data, indices, params, cfg);
  const std::vector<double> margins = margins_for(fwd.batch, cfg);
  const LossReport loss = loss_with_margins(fwd.batch, margins);
  const EmbeddingGradients d_embed = grad_embeddings(fwd.batch, margins);

  const std::size_t embed = params.w_image.rows;
  const std::size_t latent = params.w_image.cols;
  BatchGradients out;
  out.loss = loss.total;
  out.report = decompose(fwd.batch, margins);
  out.d_w_image = encoder_gradient(fwd.raw_image, fwd.batch.image_embeds.values,
                                   d_embed.d_image, fwd.norm_image, embed, latent);
  out.d_w_text = encoder_gradient(fwd.raw_text, fwd.batch.text_embeds.values,
                                  d_embed.d_text, fwd.norm_text, embed, latent);
  return out;
}

double batch_loss(const ToyDataset& data, const std::vector<std::size_t>& indices,
                  const EncoderParams& params, const TrainConfig& cfg) {
  const Forward fwd = forward_batch(data, indices, params, cfg);
  return loss_with_margins(fwd.batch, margins_for(fwd.batch, cfg)).total;
}

TrainResult train(const ToyDataset& data, const TrainConfig& cfg) {
  validate_train_config(cfg);
  const std::size_t latent = static_cast<std::size_t>(data.config.latent_dim);
  const std::size_t n_pairs = data.pairs.size();
  const std::size_t batch = std::min<std::size_t>(cfg.batch, n_pairs);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  TrainResult result;
  result.params.w_image = Matrix(latent, latent);
  result.params.w_text = Matrix(latent, latent);
  const double init_scale = 1.0 / std::sqrt(static_cast<double>(latent));
  for (auto& v : result.params.w_image.data) v = gauss(rng) * init_scale;
  for (auto& v : result.params.w_text.data) v = gauss(rng) * init_scale;

  Matrix vel_image(latent, latent);
  Matrix vel_text(latent, latent);
  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), 0);

  std::size_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t at = 0; at + batch <= n_pairs; at += batch) {
      const std::vector<std::size_t> indices(order.begin() + static_cast<long>(at),
                                             order.begin() + static_cast<long>(at + batch));
      BatchGradients grads;
      try {
        grads = batch_gradients(data, indices, result.params, cfg);
      } catch (const ZeroRowError& e) {
        throw DivergenceError(step, e.what());
      }
      if (!std::isfinite(grads.loss))
        throw DivergenceError(step, "loss became non-finite");
      for (std::size_t k = 0; k < vel_image.data.size(); ++k) {
        vel_image.data[k] = cfg.momentum * vel_image.data[k] + grads.d_w_image.data[k];
        result.params.w_image.data[k] -= cfg.learning_rate * vel_image.data[k];
      }
      for (std::size_t k = 0; k < vel_text.data.size(); ++k) {
        vel_text.data[k] = cfg.momentum * vel_text.data[k] + grads.d_w_text.data[k];
        result.params.w_text.data[k] -= cfg.learning_rate * vel_text.data[k];
      }
      StepTrace row;
      row.step = step;
      row.loss = grads.loss;
      row.report = grads.report;
      row.report.step = step;
      result.trace.push_back(row);
      ++step;
    }
  }
  result.eval = evaluate(result.params, data, cfg.temperature);
  return result;
}

namespace {

std::vector<double> embed_one(const Matrix& w, const std::vector<double>& x) {
  std::vector<double> e(w.rows, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < w.cols; ++k) acc += w(i, k) * x[k];
    e[i] = acc;
  }
  double norm = 0.0;
  for (double v : e) norm += v * v;
  norm = std::sqrt(norm);
  if (norm <= 1e-12) throw ZeroRowError(0);
  for (double& v : e) v /= norm;
  return e;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

}  // namespace

EvalReport evaluate(const EncoderParams& params, const ToyDataset& data,
                    double temperature) {
  if (!(temperature > 0.0)) throw InvalidConfigError("temperature must be positive");
  EvalReport report;
  std::vector<double> gaps;
  std::vector<double> ratings;
  gaps.reserve(data.pairs.size());
  ratings.reserve(data.pairs.size());
  std::size_t i2t_hits = 0;
  std::size_t t2i_hits = 0;
  for (const auto& pair : data.pairs) {
    const std::vector<double> v = embed_one(params.w_image, pair.image);
    const std::vector<double> v_neg = embed_one(params.w_image, pair.negative_image);
    const std::vector<double> t = embed_one(params.w_text, pair.text);
    const std::vector<double> t_neg = embed_one(params.w_text, pair.negative_text);
    const double s_pos = dot(v, t) / temperature;
    const double s_hard = dot(v, t_neg) / temperature;
    if (s_pos > s_hard) ++i2t_hits;
    if (dot(t, v) / temperature > dot(t, v_neg) / temperature) ++t2i_hits;
    gaps.push_back(s_pos - s_hard);
    ratings.push_back(pair.concreteness);
  }
  const double n = static_cast<double>(data.pairs.size());
  report.i2t_acc = static_cast<double>(i2t_hits) / n;
  report.t2i_acc = static_cast<double>(t2i_hits) / n;
  double mean_gap = 0.0;
  for (double g : gaps) mean_gap += g;
  report.mean_logit_gap = mean_gap / n;
  report.rank_correlation = spearman(ratings, gaps);
  return report;
}

namespace {

std::vector<double> ranks_of(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return 0.0;
  const std::vector<double> ra = ranks_of(a);
  const std::vector<double> rb = ranks_of(b);
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = ra[i] - mean_a;
    const double db = rb[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) return 0.0;
  return cov / std::sqrt(var_a * var_b);
}

void write_trace_csv(const std::string& path, const std::vector<StepTrace>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "step,loss,positive_pull,hard_reject,easy_reject,hard_share\n";
  char buf[512];
  for (const auto& row : trace) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.step,
                  row.loss, row.report.positive_pull, row.report.hard_reject,
                  row.report.easy_reject, row.report.hard_share);
    out << buf;
  }
}

void write_eval_json(const std::string& path, const EvalReport& eval) {
  nlohmann::ordered_json j;
  j["i2t_acc"] = eval.i2t_acc;
  j["t2i_acc"] = eval.t2i_acc;
  j["mean_logit_gap"] = eval.mean_logit_gap;
  j["rank_correlation"] = eval.rank_correlation;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace cml
