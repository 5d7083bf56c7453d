#pragma once

#include <stdexcept>
#include <string>

namespace dockd {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Document (or one of its parts) violates its invariants.
class DocumentError : public Error {
 public:
  using Error::Error;
};

/// A caller passed an argument outside an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// An LLM completion could not be turned into the requested structure.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Template assets are missing, unknown, or fail hash verification.
class TemplateError : public Error {
 public:
  using Error::Error;
};

/// Transport or server failure after retries were exhausted.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// The backend rejected our credentials (HTTP 401/403). Never retried.
class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// The replay stub has no completion for the prompt's hash.
class ReplayMiss : public BackendError {
 public:
  ReplayMiss(const std::string& prompt_sha256)
      : BackendError("replay miss for prompt sha256 " + prompt_sha256),
        hash_(prompt_sha256) {}
  const std::string& hash() const { return hash_; }

 private:
  std::string hash_;
};

class CandidateError : public Error {
 public:
  using Error::Error;
};

class ExportError : public Error {
 public:
  using Error::Error;
};

}  // namespace dockd
