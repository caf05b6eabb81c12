#pragma once

#include <stdexcept>
#include <string>

namespace ale {

// Base class for all pipeline errors. The CLI maps ValidationError branches
// to exit code 2 and everything else to exit code 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input rejected before any pipeline work started.
struct ValidationError : Error {
  using Error::Error;
};

struct EmptyRequest : ValidationError {
  using ValidationError::ValidationError;
};

// Joined base prompt does not fit the encoder context window.
struct OverflowError : ValidationError {
  using ValidationError::ValidationError;
};

struct RangeError : ValidationError {
  using ValidationError::ValidationError;
};

// Encoder produced a matrix that violates its declared shape contract.
struct EncoderShapeError : Error {
  using Error::Error;
};

struct MissingStrippedPrompt : ValidationError {
  using ValidationError::ValidationError;
};

struct MaskShapeError : Error {
  using Error::Error;
};

// Transport-level segmenter failure. Distinct from a segmentation miss,
// which yields a fallback signal instead of an exception.
struct SegmenterUnavailable : Error {
  using Error::Error;
};

// Masks fed to attention blending do not partition the pixel grid.
struct PartitionError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct ScheduleError : Error {
  using Error::Error;
};

struct BackendError : Error {
  using Error::Error;
};

struct EmptyBackground : Error {
  using Error::Error;
};

struct ManifestError : ValidationError {
  using ValidationError::ValidationError;
};

struct MissingAttribute : ValidationError {
  using ValidationError::ValidationError;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace ale
