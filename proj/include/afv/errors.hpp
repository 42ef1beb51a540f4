#ifndef AFV_ERRORS_HPP_
#define AFV_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace afv {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ─── configuration / input data ───

struct ParseError : Error {
  using Error::Error;
};

// A (device, function) entry required for a cost lookup is absent from the
// energy catalog.
struct MissingEntry : Error {
  using Error::Error;
};

// A preference, registration or scenario references a device, app or context
// name that does not exist.
struct UnknownReference : Error {
  using Error::Error;
};

// ─── allocation ───

// A request has no mappable device at all.
struct InfeasibleRequest : Error {
  using Error::Error;
};

// Master election was asked to pick from an empty candidate list.
struct EmptyCandidates : Error {
  using Error::Error;
};

// The exact solver refuses instances whose device count makes subset
// enumeration intractable.
struct InstanceTooLarge : Error {
  using Error::Error;
};

// ─── wire protocol ───

struct UnknownTypeError : Error {
  using Error::Error;
};

struct TruncatedError : Error {
  using Error::Error;
};

struct TrailingBytesError : Error {
  using Error::Error;
};

struct InvalidEnumError : Error {
  using Error::Error;
};

// A value does not fit the fixed-width field it must be encoded into.
struct FieldOverflowError : Error {
  using Error::Error;
};

}  // namespace afv

#endif  // AFV_ERRORS_HPP_
