#pragma once

/**
 * Error taxonomy shared by every module.
 *
 * All library errors derive from steer::Error so callers can catch the
 * whole family or individual conditions. Errors carry enough context to
 * be actionable (offsets, status codes, budget values).
 */

#include <cstddef>
#include <stdexcept>
#include <string>

namespace steer {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text cannot be segmented into vocabulary symbols; `offset` is the first
/// byte position where no symbol matches.
class UntokenizableText : public Error {
 public:
  UntokenizableText(const std::string& text, std::size_t offset)
      : Error("untokenizable text at offset " + std::to_string(offset) +
              ": \"" + text + "\""),
        offset(offset) {}
  std::size_t offset;
};

/// A tabular model has no row for the requested context and no default row.
class MissingContext : public Error {
 public:
  using Error::Error;
};

/// Exact enumeration would exceed the configured state budget.
class StateSpaceTooLarge : public Error {
 public:
  StateSpaceTooLarge(std::size_t states, std::size_t budget)
      : Error("state space too large: " + std::to_string(states) +
              " states exceeds budget " + std::to_string(budget)) {}
};

/// The model handle only supports sampling; per-token probabilities are
/// unavailable (the black-box constraint).
class ScoringUnsupported : public Error {
 public:
  using Error::Error;
};

/// A scored prefix has probability exactly zero under one of the models.
class ZeroSupport : public Error {
 public:
  using Error::Error;
};

class VocabMismatch : public Error {
 public:
  using Error::Error;
};

/// Exhaustive expansion would exceed the configured branch budget.
class SupportTooLarge : public Error {
 public:
  using Error::Error;
};

/// A search sampled more base tokens than its hard cap allows.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class Timeout : public Error {
 public:
  using Error::Error;
};

class HttpStatus : public Error {
 public:
  HttpStatus(int status, const std::string& detail)
      : Error("http status " + std::to_string(status) +
              (detail.empty() ? "" : ": " + detail)),
        status(status) {}
  int status;
};

/// 429 responses that survived the retry budget.
class RateLimited : public Error {
 public:
  using Error::Error;
};

}  // namespace steer
