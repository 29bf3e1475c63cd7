#pragma once

#include <stdexcept>
#include <string>

namespace clever {

// Raised for malformed user inputs: files, shapes, out-of-range options.
// The CLI maps this (and std::invalid_argument) to exit code 2.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a computation produces non-finite values or diverges.
// The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace clever
