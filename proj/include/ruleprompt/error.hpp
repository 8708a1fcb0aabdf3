#pragma once

#include <stdexcept>
#include <string>

namespace ruleprompt {

// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files (corpus, config, fixture spec, checkpoint).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Violated operation preconditions and invalid configuration values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Failure talking to a remote backend. Retriable.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace ruleprompt
