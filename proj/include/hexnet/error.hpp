#pragma once

#include <stdexcept>

namespace hexnet {

// Shape or dimension disagreement between tensors, kernels, or specs.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Filesystem-level failure: missing file, short read, failed write.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Structurally invalid bytes: wrong magic, wrong version, bad label, bad size.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Layer protocol violation, e.g. backward without a train-mode forward.
class StateError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// Training produced a non-finite value.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace hexnet
