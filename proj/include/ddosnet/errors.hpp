#pragma once

#include <stdexcept>
#include <string>

namespace ddosnet {

// Error categories map onto CLI exit codes: config 2, data 3, numeric 4.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ddosnet
