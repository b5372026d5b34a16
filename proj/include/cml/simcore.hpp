#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cml/errors.hpp"

namespace cml {

// Dense row-major double matrix. Deliberately minimal: the loss path needs a
// fixed, sequential summation order per row, so everything is plain loops.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double* row(std::size_t r) { return data.data() + r * cols; }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

struct EmbeddingMatrix {
  Matrix values;
  bool normalized = false;

  std::size_t rows() const { return values.rows; }
  std::size_t dim() const { return values.cols; }
};

// Scales every row to unit Euclidean norm. Throws ZeroRowError if a row norm
// is <= 1e-12.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m);

// Counterpart index under the blocked [anchors | hard negatives] layout:
// i -> i+N (mod 2N). An involution.
std::size_t counterpart(std::size_t i, std::size_t n_anchors);

// A batch of N anchor pairs plus their N hard-negative pairs, 2N rows per
// modality. concreteness has length 2N and is mirrored across counterparts.
struct PairedBatch {
  EmbeddingMatrix image_embeds;
  EmbeddingMatrix text_embeds;
  std::size_t n_anchors = 0;
  double temperature = 0.07;
  std::vector<double> concreteness;

  std::size_t total_rows() const { return 2 * n_anchors; }
};

// Validates layout invariants: even row count matching 2N, equal shapes,
// positive temperature, mirrored concreteness. Throws on violation.
void validate_batch(const PairedBatch& batch);

// Convenience constructor; concreteness may have length N (mirrored here) or
// 2N (mirroring verified).
PairedBatch make_paired_batch(EmbeddingMatrix image_embeds,
                              EmbeddingMatrix text_embeds,
                              double temperature,
                              std::vector<double> concreteness);

enum class Direction { image_to_text, text_to_image };

struct SimilarityMatrix {
  Matrix values;  // 2N x 2N
  Direction direction = Direction::image_to_text;
};

// Temperature-scaled cross-modal cosine similarities. Requires both embedding
// matrices normalized and of equal shape. image_to_text[i][j] = dot(v_i, t_j)/tau.
SimilarityMatrix similarity(const PairedBatch& batch, Direction direction);

// ---- Embedding file I/O ----
// CSV: header "id,dim0,...,dimD-1", one row per embedding.
// Binary: u64-le row count, u64-le dim, then rows*dim f64-le values.

Matrix read_embeddings_csv(const std::string& path);
Matrix read_embeddings_binary(const std::string& path);
void write_embeddings_csv(const std::string& path, const Matrix& m);
void write_embeddings_binary(const std::string& path, const Matrix& m);

// Dispatches on extension: ".csv" loads CSV, anything else binary.
Matrix read_embeddings(const std::string& path);

}  // namespace cml
