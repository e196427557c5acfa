#pragma once

#include <stdexcept>
#include <string>

namespace ncv {

/// Invalid configuration, spec or CLI input (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset content or I/O problem (exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingFileError : public DataError {
 public:
  using DataError::DataError;
};

class ChannelCountMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class DuplicateEntryError : public DataError {
 public:
  using DataError::DataError;
};

class UnmappableLabelError : public DataError {
 public:
  using DataError::DataError;
};

/// A split that should be patient-isolated was found to leak (exit code 4).
class LeakageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ncv
