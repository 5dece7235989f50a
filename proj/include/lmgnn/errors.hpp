#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace lmgnn {

// Dimension disagreement between tensors or between a tensor and a model.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Index (token id, label, relation id, node id) out of its valid range.
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Violated precondition of an operation.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed or inconsistent on-disk data. Message carries file and line.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid run configuration (unknown key, value out of range).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss or parameter encountered during training.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lmgnn

// LMGNN_CHECK(cond, ErrorType, "message " << value);
#define LMGNN_CHECK(cond, Err, msg)             \
  do {                                          \
    if (!(cond)) {                              \
      std::ostringstream lmgnn_check_oss_;      \
      lmgnn_check_oss_ << msg;                  \
      throw Err(lmgnn_check_oss_.str());        \
    }                                           \
  } while (0)
