#include "labcube/report.hpp"

#include <algorithm>

namespace labcube {

std::string to_string(Severity severity) {
  return severity == Severity::Error ? "error" : "warning";
}

void ValidationReport::add(std::string code, std::string subject, std::string message,
                           Severity severity) {
  findings_.push_back({severity, std::move(code), std::move(subject), std::move(message)});
}

void ValidationReport::append(const ValidationReport& other) {
  findings_.insert(findings_.end(), other.findings_.begin(), other.findings_.end());
}

bool ValidationReport::has_code(const std::string& code) const {
  return std::any_of(findings_.begin(), findings_.end(),
                     [&](const Finding& f) { return f.code == code; });
}

bool ValidationReport::has_errors() const {
  return std::any_of(findings_.begin(), findings_.end(),
                     [](const Finding& f) { return f.severity == Severity::Error; });
}

namespace {

std::string summarize(const ValidationReport& report) {
  std::string text = std::to_string(report.size()) + " validation finding(s)";
  if (!report.empty()) {
    const auto& first = report.findings().front();
    text += "; first: " + first.code + " " + first.subject + ": " + first.message;
  }
  return text;
}

}  // namespace

ValidationFailed::ValidationFailed(ValidationReport report)
    : Error("VALIDATION_FAILED", summarize(report)), report_(std::move(report)) {}

}  // namespace labcube
