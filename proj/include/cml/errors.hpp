#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cml {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroRowError : Error {
  explicit ZeroRowError(std::size_t row_index)
      : Error("row " + std::to_string(row_index) + " has near-zero norm"),
        row(row_index) {}
  std::size_t row;
};

struct ShapeMismatchError : Error { using Error::Error; };
struct NotNormalizedError : Error { using Error::Error; };
struct IndexOutOfRangeError : Error { using Error::Error; };
struct NonFiniteError : Error { using Error::Error; };
struct InvalidConfigError : Error { using Error::Error; };
struct EmptyInputError : Error { using Error::Error; };
struct UnknownCategoryError : Error { using Error::Error; };

struct ParseError : Error {
  ParseError(std::size_t line_number, const std::string& what_arg)
      : Error("line " + std::to_string(line_number) + ": " + what_arg),
        line(line_number) {}
  std::size_t line;
};

struct MissingColumnError : Error {
  explicit MissingColumnError(const std::string& name)
      : Error("missing column: " + name), column(name) {}
  std::string column;
};

struct RatingOutOfRangeError : Error {
  RatingOutOfRangeError(std::size_t line_number, double rating)
      : Error("line " + std::to_string(line_number) + ": rating " +
              std::to_string(rating) + " outside [1,5]"),
        line(line_number), value(rating) {}
  std::size_t line;
  double value;
};

struct DivergenceError : Error {
  DivergenceError(std::size_t step_index, const std::string& what_arg)
      : Error("step " + std::to_string(step_index) + ": " + what_arg),
        step(step_index) {}
  std::size_t step;
};

struct TimeoutError : Error { using Error::Error; };
struct MalformedResponseError : Error { using Error::Error; };
struct RetriesExhaustedError : Error { using Error::Error; };

struct BackendError : Error {
  BackendError(int status_code, const std::string& what_arg)
      : Error("backend status " + std::to_string(status_code) + ": " + what_arg),
        status(status_code) {}
  int status;
};

}  // namespace cml
