#pragma once

#include <stdexcept>
#include <string>

namespace lkg {

/// Malformed or inconsistent input data (bad JSONL line, unknown id, non-finite loss, ...).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Caller violated an operation's precondition (bad argument, out-of-range parameter).
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

} // namespace lkg
