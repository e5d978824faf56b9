// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace intruder {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by caller-supplied data (shapes, ranges, non-finite values).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Rank correlation requested on a sample whose ranks have zero variance.
class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

/// Payload or manifest is inconsistent with itself (bad checksum, truncation, bad offsets).
class CorruptionError : public StorageError {
 public:
  using StorageError::StorageError;
};

class VersionError : public StorageError {
 public:
  using StorageError::StorageError;
};

/// Two collections of tensors disagree on names or shapes.
class MismatchError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step) : Error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace intruder
