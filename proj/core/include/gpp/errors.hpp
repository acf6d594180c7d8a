#pragma once

#include <stdexcept>

namespace gpp {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IndexOutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ModelMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyDataset : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gpp
