#pragma once

#include <stdexcept>
#include <string>

namespace cfdiff {

// Invalid configuration or parameter values. The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Image/mask dimension or channel-count mismatches.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mask content violations (non-binary values, p not a subset of b, ...).
class MaskError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Phantom generation gave up after the configured number of retries.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failures (unreadable/unwritable paths, malformed files).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training diverged; the message names the offending epoch.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric is undefined for the given inputs (e.g. empty pathology mask).
class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WeightsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WeightsVersionError : public WeightsError {
 public:
  using WeightsError::WeightsError;
};

class WeightsTruncatedError : public WeightsError {
 public:
  using WeightsError::WeightsError;
};

class WeightsShapeError : public WeightsError {
 public:
  using WeightsError::WeightsError;
};

}  // namespace cfdiff
