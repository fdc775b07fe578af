/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/error.hpp"

#include <fmt/format.h>

#include "nde4/validation.hpp"

namespace nde4 {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedToken: return "MalformedToken";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateInstance: return "DuplicateInstance";
    case Errc::InvalidManifest: return "InvalidManifest";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::UnknownShell: return "UnknownShell";
    case Errc::UnknownStandardTag: return "UnknownStandardTag";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EncodingError: return "EncodingError";
    case Errc::DictionaryConflict: return "DictionaryConflict";
    case Errc::DuplicateOrder: return "DuplicateOrder";
    case Errc::ValidationFailed: return "ValidationFailed";
    case Errc::UnknownStation: return "UnknownStation";
    case Errc::IllegalTransition: return "IllegalTransition";
    case Errc::UnknownOrder: return "UnknownOrder";
    case Errc::WrongState: return "WrongState";
    case Errc::DanglingArchiveRef: return "DanglingArchiveRef";
    case Errc::OversizedPayload: return "OversizedPayload";
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadVersion: return "BadVersion";
    case Errc::BadChannel: return "BadChannel";
    case Errc::NonCanonicalOrder: return "NonCanonicalOrder";
    case Errc::TruncatedElement: return "TruncatedElement";
    case Errc::BadPreamble: return "BadPreamble";
    case Errc::DuplicateUID: return "DuplicateUID";
    case Errc::UnknownUID: return "UnknownUID";
    case Errc::IoError: return "IoError";
    case Errc::UnmappedField: return "UnmappedField";
    case Errc::InvalidMapping: return "InvalidMapping";
    case Errc::InvalidPolicy: return "InvalidPolicy";
    case Errc::UnknownContract: return "UnknownContract";
    case Errc::WrongConsumer: return "WrongConsumer";
    case Errc::PolicyExhausted: return "PolicyExhausted";
    case Errc::PolicyExpired: return "PolicyExpired";
    case Errc::ForwardProhibited: return "ForwardProhibited";
    case Errc::UncertifiedConnector: return "UncertifiedConnector";
    case Errc::UnknownComponent: return "UnknownComponent";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::ScenarioDeadlock: return "ScenarioDeadlock";
    case Errc::GridShapeMismatch: return "GridShapeMismatch";
    case Errc::FaultNotApplicable: return "FaultNotApplicable";
  }
  return "Unknown";
}

std::optional<Errc> errc_from_string(std::string_view name) noexcept {
  for (Errc code : kAllErrc) {
    if (to_string(code) == name) return code;
  }
  return std::nullopt;
}

namespace {

std::string format_what(Errc code, const std::string& message, std::optional<std::size_t> offset) {
  if (offset) return fmt::format("{} at byte {}: {}", to_string(code), *offset, message);
  return fmt::format("{}: {}", to_string(code), message);
}

}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> offset)
    : std::runtime_error(format_what(code, message, offset)),
      code_(code),
      offset_(offset),
      detail_(message) {}

std::string_view to_string(FindingKind kind) noexcept {
  switch (kind) {
    case FindingKind::MissingHeaderId: return "MissingHeaderId";
    case FindingKind::DuplicateBodyEntry: return "DuplicateBodyEntry";
    case FindingKind::UnknownSemanticTag: return "UnknownSemanticTag";
    case FindingKind::DanglingChild: return "DanglingChild";
    case FindingKind::UnknownStandardTag: return "UnknownStandardTag";
    case FindingKind::PrivateTag: return "PrivateTag";
    case FindingKind::ValueRepMismatch: return "ValueRepMismatch";
    case FindingKind::MultiplicityViolation: return "MultiplicityViolation";
    case FindingKind::MissingMandatory: return "MissingMandatory";
    case FindingKind::VocabularyViolation: return "VocabularyViolation";
  }
  return "Unknown";
}

std::string_view to_string(Severity severity) noexcept {
  switch (severity) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::Error: return "error";
  }
  return "unknown";
}

bool Report::ok() const noexcept {
  for (const auto& f : findings_) {
    if (f.severity == Severity::Error) return false;
  }
  return true;
}

bool Report::clean() const noexcept {
  for (const auto& f : findings_) {
    if (f.severity != Severity::Info) return false;
  }
  return true;
}

bool Report::contains(FindingKind kind) const noexcept {
  for (const auto& f : findings_) {
    if (f.kind == kind) return true;
  }
  return false;
}

std::string Report::str() const {
  std::string out;
  for (const auto& f : findings_) {
    out += fmt::format("{} {}: {}\n", to_string(f.severity), to_string(f.kind), f.detail);
  }
  return out;
}

namespace {

std::string summarize(const Report& report) {
  std::string out;
  for (const auto& f : report.findings()) {
    if (f.severity == Severity::Info) continue;
    if (!out.empty()) out += "; ";
    out += fmt::format("{} {}", to_string(f.kind), f.detail);
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(Errc code, Report report)
    : Error(code, summarize(report)), report_(std::move(report)) {}

}  // namespace nde4
