#pragma once

#include <stdexcept>
#include <string>

namespace acd {

/// Base class for every recoverable error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter / input validation failed. The message lists every violated
/// bound with the offending field name.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File or wire-format problem (bad magic, truncated payload, nonzero pad bits).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked under the wrong mode flags.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// Two filters (or a report and the active filter) disagree on (m_bits, k, seed).
class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

/// A report filter failed the registry's statistical plausibility gate.
class PlausibilityError : public Error {
 public:
  PlausibilityError(const std::string& what, double fill_ratio)
      : Error(what), fill_ratio_(fill_ratio) {}

  double fill_ratio() const noexcept { return fill_ratio_; }

 private:
  double fill_ratio_;
};

/// A diagnosed device has no usable history in the requested window.
class EmptyWindowError : public Error {
 public:
  using Error::Error;
};

}  // namespace acd
