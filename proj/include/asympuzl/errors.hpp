#pragma once

#include <stdexcept>
#include <string>

namespace asympuzl {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid specification, run configuration, or episode setup.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Broken internal invariant (e.g. comparing hypotheses of different sizes).
class InternalError : public Error {
public:
  using Error::Error;
};

// Network failure that survived the retry policy.
class TransportError : public Error {
public:
  using Error::Error;
};

// The endpoint answered, but not in the expected shape (or rejected the request).
class ProtocolError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace asympuzl
