#pragma once

#include <compare>
#include <string>
#include <vector>

#include "labcube/error.hpp"

namespace labcube {

enum class Severity { Error, Warning };

std::string to_string(Severity severity);

struct Finding {
  Severity severity = Severity::Error;
  std::string code;
  std::string subject;
  std::string message;

  auto operator<=>(const Finding&) const = default;
};

// Findings are data, not failures. A report with no error-severity findings
// describes something that can be deployed.
class ValidationReport {
 public:
  void add(std::string code, std::string subject, std::string message,
           Severity severity = Severity::Error);
  void append(const ValidationReport& other);

  const std::vector<Finding>& findings() const noexcept { return findings_; }
  bool empty() const noexcept { return findings_.empty(); }
  std::size_t size() const noexcept { return findings_.size(); }
  bool has_code(const std::string& code) const;
  bool has_errors() const;

  bool operator==(const ValidationReport&) const = default;

 private:
  std::vector<Finding> findings_;
};

class ValidationFailed : public Error {
 public:
  explicit ValidationFailed(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

}  // namespace labcube
