#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prepubdiff {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input bytes could not be parsed. Carries the location where parsing stopped.
class ParseError : public Error {
public:
  ParseError(const std::string& message, std::size_t byte_offset, std::size_t line = 0,
             std::size_t column = 0);

  std::size_t byte_offset() const noexcept { return byte_offset_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& message() const noexcept { return message_; }

private:
  std::string message_;
  std::size_t byte_offset_;
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed input that does not describe an acceptable record.
class RecordRejected : public Error {
public:
  using Error::Error;
};

/// A stage precondition is not met (e.g. an artifact of an earlier stage is missing).
class MissingArtifact : public Error {
public:
  MissingArtifact(const std::string& artifact, const std::string& producing_stage);
  const std::string& producing_stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

}  // namespace prepubdiff
