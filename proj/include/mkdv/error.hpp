#pragma once

#include <stdexcept>
#include <string>

namespace mkdv {

/// Base of every exception the library throws on a violated contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the supported domain (order, window, jet order, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Iterative procedure stopped without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state during time integration.
class BlowUpError : public Error {
 public:
  using Error::Error;
};

}  // namespace mkdv
