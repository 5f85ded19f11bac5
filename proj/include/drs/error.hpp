#ifndef DRS_ERROR_HPP
#define DRS_ERROR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace drs {

// Root of every error this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters or configuration (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable, malformed or inconsistent input data (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

// The black-box classifier could not answer (CLI exit code 3).
class ClassifierUnavailable : public Error {
 public:
  ClassifierUnavailable(const std::string& what, std::int64_t request_id = -1)
      : Error(request_id >= 0 ? what + " (request " + std::to_string(request_id) + ")" : what),
        request_id_(request_id) {}

  std::int64_t request_id() const noexcept { return request_id_; }

 private:
  std::int64_t request_id_;
};

}  // namespace drs

#endif  // DRS_ERROR_HPP
