#pragma once

#include <stdexcept>
#include <string>

namespace esgread {

// Bad input data: malformed files, invalid labels, missing ids. The CLI maps
// this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad invocation: unknown flags, unknown feature groups, contradictory
// options. The CLI maps this to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure talking to a remote scoring endpoint.
class RemoteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training diverged (non-finite loss) or could not proceed.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A statistic that is mathematically undefined for the given input, e.g.
// Kendall tau-b when one side is entirely tied.
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace esgread
