/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nde4/error.hpp"

namespace nde4 {

enum class FindingKind {
  MissingHeaderId,
  DuplicateBodyEntry,
  UnknownSemanticTag,
  DanglingChild,
  UnknownStandardTag,
  PrivateTag,
  ValueRepMismatch,
  MultiplicityViolation,
  MissingMandatory,
  VocabularyViolation,
};

enum class Severity { Info, Warning, Error };

struct Finding {
  FindingKind kind;
  Severity severity;
  std::string detail;

  friend bool operator==(const Finding&, const Finding&) = default;
};

[[nodiscard]] std::string_view to_string(FindingKind kind) noexcept;
[[nodiscard]] std::string_view to_string(Severity severity) noexcept;

/// Result of a validation pass. Findings are data, not errors.
class Report {
 public:
  void add(FindingKind kind, Severity severity, std::string detail) {
    findings_.push_back({kind, severity, std::move(detail)});
  }

  [[nodiscard]] const std::vector<Finding>& findings() const noexcept { return findings_; }
  [[nodiscard]] bool empty() const noexcept { return findings_.empty(); }
  /// No error-severity findings.
  [[nodiscard]] bool ok() const noexcept;
  /// No error- or warning-severity findings.
  [[nodiscard]] bool clean() const noexcept;
  [[nodiscard]] bool contains(FindingKind kind) const noexcept;
  [[nodiscard]] std::string str() const;

 private:
  std::vector<Finding> findings_;
};

/// ValidationFailed / InvalidManifest carry the report that caused them.
class ValidationError : public Error {
 public:
  ValidationError(Errc code, Report report);
  [[nodiscard]] const Report& report() const noexcept { return report_; }

 private:
  Report report_;
};

}  // namespace nde4
