#include "cml/simcore.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cml {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeMismatchError("matmul: inner dimensions differ");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw ShapeMismatchError("matmul_at_b: row counts differ");
  Matrix c(a.cols, b.cols);
  for (std::size_t i = 0; i < a.cols; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.rows; ++k) acc += a(k, i) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m) {
  EmbeddingMatrix out = m;
  for (std::size_t i = 0; i < out.values.rows; ++i) {
    double* row = out.values.row(i);
    double sq = 0.0;
    for (std::size_t j = 0; j < out.values.cols; ++j) sq += row[j] * row[j];
    const double norm = std::sqrt(sq);
    if (norm <= 1e-12) throw ZeroRowError(i);
    for (std::size_t j = 0; j < out.values.cols; ++j) row[j] /= norm;
  }
  out.normalized = true;
  return out;
}

std::size_t counterpart(std::size_t i, std::size_t n_anchors) {
  const std::size_t total = 2 * n_anchors;
  if (i >= total)
    throw IndexOutOfRangeError("counterpart: index " + std::to_string(i) +
                               " out of range for 2N=" + std::to_string(total));
  return i < n_anchors ? i + n_anchors : i - n_anchors;
}

void validate_batch(const PairedBatch& batch) {
  const std::size_t total = batch.total_rows();
  if (batch.n_anchors < 1) throw InvalidConfigError("batch needs at least one anchor");
  if (batch.image_embeds.rows() != total || batch.text_embeds.rows() != total)
    throw ShapeMismatchError("embedding rows must equal 2N");
  if (batch.image_embeds.dim() != batch.text_embeds.dim())
    throw ShapeMismatchError("image/text embedding dims differ");
  if (!(batch.temperature > 0.0))
    throw InvalidConfigError("temperature must be positive");
  if (batch.concreteness.size() != total)
    throw ShapeMismatchError("concreteness must have length 2N");
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t j = counterpart(i, batch.n_anchors);
    const double a = batch.concreteness[i];
    const double b = batch.concreteness[j];
    // NaN sentinels must be mirrored too.
    const bool equal = (a == b) || (std::isnan(a) && std::isnan(b));
    if (!equal) throw InvalidConfigError("concreteness not mirrored across counterparts");
  }
}

PairedBatch make_paired_batch(EmbeddingMatrix image_embeds,
                              EmbeddingMatrix text_embeds,
                              double temperature,
                              std::vector<double> concreteness) {
  const std::size_t total = image_embeds.rows();
  if (total < 2 || total % 2 != 0)
    throw ShapeMismatchError("batch row count must be even and >= 2");
  PairedBatch batch;
  batch.image_embeds = std::move(image_embeds);
  batch.text_embeds = std::move(text_embeds);
  batch.n_anchors = total / 2;
  batch.temperature = temperature;
  if (concreteness.size() == batch.n_anchors) {
    batch.concreteness = concreteness;
    batch.concreteness.insert(batch.concreteness.end(), concreteness.begin(),
                              concreteness.end());
  } else {
    batch.concreteness = std::move(concreteness);
  }
  validate_batch(batch);
  return batch;
}

SimilarityMatrix similarity(const PairedBatch& batch, Direction direction) {
  validate_batch(batch);
  if (!batch.image_embeds.normalized || !batch.text_embeds.normalized)
    throw NotNormalizedError("similarity requires normalized embeddings");
  const Matrix& rows_of =
      direction == Direction::image_to_text ? batch.image_embeds.values
                                            : batch.text_embeds.values;
  const Matrix& cols_of =
      direction == Direction::image_to_text ? batch.text_embeds.values
                                            : batch.image_embeds.values;
  const std::size_t n = rows_of.rows;
  const std::size_t d = rows_of.cols;
  SimilarityMatrix sim;
  sim.direction = direction;
  sim.values = Matrix(n, n);
  const double inv_tau = 1.0 / batch.temperature;
  for (std::size_t i = 0; i < n; ++i) {
    const double* a = rows_of.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* b = cols_of.row(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += a[k] * b[k];
      sim.values(i, j) = dot * inv_tau;
    }
  }
  return sim;
}

// ---- file I/O ----

Matrix read_embeddings_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty embedding file");
  // Header: id,dim0,...  Column count fixes the dimension.
  std::size_t dim = 0;
  for (char ch : line)
    if (ch == ',') ++dim;
  if (dim == 0) throw ParseError(1, "expected header id,dim0,...");
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ',')) throw ParseError(line_no, "missing id cell");
    std::size_t got = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad number: " + cell);
      }
      ++got;
    }
    if (got != dim)
      throw ParseError(line_no, "expected " + std::to_string(dim) + " values, got " +
                                    std::to_string(got));
    ++rows;
  }
  Matrix m(rows, dim);
  m.data = std::move(values);
  return m;
}

void write_embeddings_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "id";
  for (std::size_t j = 0; j < m.cols; ++j) out << ",dim" << j;
  out << "\n";
  char buf[40];
  for (std::size_t i = 0; i < m.rows; ++i) {
    out << i;
    for (std::size_t j = 0; j < m.cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << ',' << buf;
    }
    out << "\n";
  }
}

namespace {

std::uint64_t read_u64_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

}  // namespace

Matrix read_embeddings_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  const std::uint64_t rows = read_u64_le(in);
  const std::uint64_t dim = read_u64_le(in);
  if (!in) throw Error("truncated header in " + path);
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(dim));
  // Host is little-endian; f64 payload is read directly.
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  if (!in) throw Error("truncated payload in " + path);
  return m;
}

void write_embeddings_binary(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_u64_le(out, m.rows);
  write_u64_le(out, m.cols);
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
}

Matrix read_embeddings(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
    return read_embeddings_csv(path);
  return read_embeddings_binary(path);
}

}  // namespace cml
