#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace labcube {

// Base of every error raised by the library. `code()` is a stable
// machine-readable identifier used by the CLI and the HTTP API.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what)
      : Error("IO_ERROR", path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Document errors

class SyntaxError : public Error {
 public:
  SyntaxError(int line, const std::string& what)
      : Error("SYNTAX_ERROR", "line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string field, std::string reason)
      : Error("SCHEMA_ERROR", field + ": " + reason), field_(std::move(field)), reason_(std::move(reason)) {}
  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

class DuplicateService : public Error {
 public:
  explicit DuplicateService(std::string name)
      : Error("DUPLICATE_SERVICE", "duplicate service '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// Settings and templates

class MalformedLine : public Error {
 public:
  MalformedLine(int line, const std::string& what)
      : Error("MALFORMED_LINE", "line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class UnresolvedVariable : public Error {
 public:
  UnresolvedVariable(std::string key, std::size_t position)
      : Error("UNRESOLVED_VARIABLE",
              "undefined variable '" + key + "' at offset " + std::to_string(position)),
        key_(std::move(key)),
        position_(position) {}
  const std::string& key() const noexcept { return key_; }
  std::size_t position() const noexcept { return position_; }

 private:
  std::string key_;
  std::size_t position_;
};

class BadVariableSyntax : public Error {
 public:
  BadVariableSyntax(std::size_t position, const std::string& what)
      : Error("BAD_VARIABLE_SYNTAX", what + " at offset " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Wraps a template failure with the service and template it came from.
class RenderError : public Error {
 public:
  RenderError(std::string service, std::string template_path, std::string cause_code,
              const std::string& what)
      : Error(cause_code, service + " (" + template_path + "): " + what),
        service_(std::move(service)),
        template_path_(std::move(template_path)) {}
  const std::string& service() const noexcept { return service_; }
  const std::string& template_path() const noexcept { return template_path_; }

 private:
  std::string service_;
  std::string template_path_;
};

// Addressing

class UnresolvedAddressKey : public Error {
 public:
  UnresolvedAddressKey(std::string service, std::string key)
      : Error("UNRESOLVED_ADDRESS_KEY", service + ": setting '" + key + "' is not defined"),
        service_(std::move(service)),
        key_(std::move(key)) {}
  const std::string& service() const noexcept { return service_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::string service_;
  std::string key_;
};

class UnparsableAddress : public Error {
 public:
  UnparsableAddress(std::string service, std::string value)
      : Error("UNPARSABLE_ADDRESS", service + ": '" + value + "' is not an IPv4 address"),
        service_(std::move(service)),
        value_(std::move(value)) {}
  const std::string& service() const noexcept { return service_; }
  const std::string& value() const noexcept { return value_; }

 private:
  std::string service_;
  std::string value_;
};

// Subscribers

class IncompleteRecord : public Error {
 public:
  IncompleteRecord(int index, std::string missing_field)
      : Error("INCOMPLETE_RECORD",
              "subscriber UE" + std::to_string(index) + " is missing " + missing_field),
        index_(index),
        missing_field_(std::move(missing_field)) {}
  int index() const noexcept { return index_; }
  const std::string& missing_field() const noexcept { return missing_field_; }

 private:
  int index_;
  std::string missing_field_;
};

class DuplicateImsi : public Error {
 public:
  explicit DuplicateImsi(std::string imsi)
      : Error("DUPLICATE_IMSI", "duplicate IMSI " + imsi), imsi_(std::move(imsi)) {}
  const std::string& imsi() const noexcept { return imsi_; }

 private:
  std::string imsi_;
};

// Engine

class EngineError : public Error {
 public:
  enum class Kind { NotFound, Conflict, Unreachable, TransferFailed, Failed };

  EngineError(Kind kind, std::string ref, const std::string& what)
      : Error(kind_code(kind), ref + ": " + what), kind_(kind), ref_(std::move(ref)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& ref() const noexcept { return ref_; }

  static std::string kind_code(Kind kind) {
    switch (kind) {
      case Kind::NotFound: return "NOT_FOUND";
      case Kind::Conflict: return "CONFLICT";
      case Kind::Unreachable: return "UNREACHABLE";
      case Kind::TransferFailed: return "TRANSFER_FAILED";
      case Kind::Failed: return "ENGINE_FAILED";
    }
    return "ENGINE_FAILED";
  }

 private:
  Kind kind_;
  std::string ref_;
};

// Orchestration

class CycleError : public Error {
 public:
  explicit CycleError(std::string chain)
      : Error("DEPENDENCY_CYCLE", "dependency cycle: " + chain), chain_(std::move(chain)) {}
  const std::string& chain() const noexcept { return chain_; }

 private:
  std::string chain_;
};

class PlanningError : public Error {
 public:
  explicit PlanningError(const std::string& context) : Error("PLANNING_ERROR", context) {}
};

class UnknownHost : public Error {
 public:
  explicit UnknownHost(std::string name)
      : Error("UNKNOWN_HOST", "host '" + name + "' is not registered"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class UnknownStack : public Error {
 public:
  explicit UnknownStack(std::string name)
      : Error("UNKNOWN_STACK", "no stack named '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class UnknownService : public Error {
 public:
  explicit UnknownService(std::string name)
      : Error("UNKNOWN_SERVICE", "no service named '" + name + "' in the active stack"),
        name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class StackAlreadyActive : public Error {
 public:
  explicit StackAlreadyActive(std::string current)
      : Error("STACK_ALREADY_ACTIVE", "stack '" + current + "' is active"),
        current_(std::move(current)) {}
  const std::string& current() const noexcept { return current_; }

 private:
  std::string current_;
};

class NoActiveSession : public Error {
 public:
  explicit NoActiveSession(const std::string& what) : Error("NO_ACTIVE_SESSION", what) {}
};

class SettingsLocked : public Error {
 public:
  explicit SettingsLocked(std::string stack)
      : Error("SETTINGS_LOCKED", "settings are locked while stack '" + stack + "' is active") {}
};

}  // namespace labcube
