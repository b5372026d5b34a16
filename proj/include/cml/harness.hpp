#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cml/graddiag.hpp"

namespace cml {

// Synthetic compositional scenes: four vocabulary slots, one latent column
// per vocabulary item, raw "image" = multi-hot mix plus noise and raw
// "caption" = the same mix pushed through a fixed rotation. The hard negative
// flips exactly one slot item; the pair's concreteness is the flip's latent
// displacement rescaled to the rating scale, so concrete flips move images
// further by construction.
struct ToyDatasetConfig {
  int vocab_object1 = 6;
  int vocab_attribute = 6;
  int vocab_relation = 4;
  int vocab_object2 = 6;
  int scenes = 2000;
  int latent_dim = 32;
  double noise_std = 0.05;
  std::uint64_t seed = 1;
  double c_min = 1.0;
  double c_max = 5.0;
};

void validate_toy_config(const ToyDatasetConfig& cfg);

struct ToyPair {
  std::vector<double> image;
  std::vector<double> negative_image;
  std::vector<double> text;
  std::vector<double> negative_text;
  double concreteness = 0.0;
  double displacement = 0.0;  // latent column distance of the flipped item
};

struct ToyDataset {
  ToyDatasetConfig config;
  std::vector<ToyPair> pairs;
  Matrix item_columns;  // latent_dim x total vocabulary
  Matrix rotation;      // text-modality rotation, orthogonal
};

ToyDataset synth_dataset(const ToyDatasetConfig& cfg);

// Linear [c_min, c_max] rescaling of a displacement given the observed range;
// a degenerate range maps everything to c_min.
double rescale_concreteness(double d, double d_min, double d_max, double c_min,
                            double c_max);

// Linear encoders (embed_dim x latent_dim); the forward pass is W x followed
// by row normalization.
struct EncoderParams {
  Matrix w_image;
  Matrix w_text;
};

// The maps that undo the dataset construction exactly: identity for images,
// the transposed rotation for text.
EncoderParams generating_encoders(const ToyDataset& data);

enum class LossKind { infonce, cement };

struct TrainConfig {
  std::size_t batch = 64;  // N anchor pairs per step (doubled internally)
  int epochs = 20;
  double learning_rate = 0.5;
  double momentum = 0.9;
  LossKind loss = LossKind::cement;
  MarginConfig margin;
  double temperature = 0.07;
  std::uint64_t seed = 7;
};

void validate_train_config(const TrainConfig& cfg);

struct EvalReport {
  double i2t_acc = 0.0;          // sim(v_i, t_i) > sim(v_i, t_i')
  double t2i_acc = 0.0;
  double mean_logit_gap = 0.0;   // mean of s_{i,i} - s_{i,i'}
  double rank_correlation = 0.0; // Spearman of concreteness vs logit gap
};

struct StepTrace {
  std::size_t step = 0;
  double loss = 0.0;
  GradientReport report;
};

struct TrainResult {
  EncoderParams params;
  std::vector<StepTrace> trace;
  EvalReport eval;
};

// Loss and encoder-parameter gradients for one batch of pair indices; the
// normalization Jacobian is part of the chain.
struct BatchGradients {
  Matrix d_w_image;
  Matrix d_w_text;
  double loss = 0.0;
  GradientReport report;
};

BatchGradients batch_gradients(const ToyDataset& data,
                               const std::vector<std::size_t>& pair_indices,
                               const EncoderParams& params, const TrainConfig& cfg);

// Forward-only loss; the finite-difference reference path.
double batch_loss(const ToyDataset& data, const std::vector<std::size_t>& pair_indices,
                  const EncoderParams& params, const TrainConfig& cfg);

// Gradient descent with momentum over shuffled batches. Deterministic under
// the config seed. Throws DivergenceError when a step produces a non-finite
// loss or a zero-norm embedding.
TrainResult train(const ToyDataset& data, const TrainConfig& cfg);

EvalReport evaluate(const EncoderParams& params, const ToyDataset& data,
                    double temperature);

// Spearman rank correlation with average ranks on ties; 0 for degenerate input.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

void write_trace_csv(const std::string& path, const std::vector<StepTrace>& trace);
void write_eval_json(const std::string& path, const EvalReport& eval);

}  // namespace cml
