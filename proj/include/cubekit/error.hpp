#ifndef CUBEKIT_ERROR_HPP
#define CUBEKIT_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cubekit {

/// Root of the toolkit's error taxonomy. Every error carries a short kind tag
/// so bindings and the CLI can surface it without RTTI games.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

class DomainError : public Error {
public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class BehindCameraError : public Error {
public:
  explicit BehindCameraError(const std::string& what)
      : Error("behind_camera", what) {}
};

/// A value fell outside its quantization range. `field()` names the offender.
class RangeError : public Error {
public:
  RangeError(std::string field, const std::string& what)
      : Error("range", what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// Malformed token text; `offset()` is the byte offset of the first bad byte.
class ParseError : public Error {
public:
  ParseError(std::size_t offset, const std::string& what)
      : Error("parse", what + " at byte " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

class ArityError : public Error {
public:
  ArityError(std::size_t expected, std::size_t got)
      : Error("arity", "expected " + std::to_string(expected) +
                           " values, got " + std::to_string(got)),
        expected_(expected), got_(got) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t got() const noexcept { return got_; }

private:
  std::size_t expected_;
  std::size_t got_;
};

class IngestError : public Error {
public:
  IngestError(std::size_t line, const std::string& what)
      : Error("ingest", "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class NotApplicableError : public Error {
public:
  explicit NotApplicableError(const std::string& what)
      : Error("not_applicable", what) {}
};

class DatasetError : public Error {
public:
  explicit DatasetError(const std::string& what) : Error("dataset", what) {}
};

class AlignmentError : public Error {
public:
  explicit AlignmentError(const std::string& what)
      : Error("alignment", what) {}
};

} // namespace cubekit

#endif // CUBEKIT_ERROR_HPP
