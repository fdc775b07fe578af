/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nde4 {

/// Every failure the library can raise. The enumerators are the error names
/// used in docs, CLI output and wire ERROR bodies.
enum class Errc {
  // identity
  MalformedToken,
  ParseError,
  // twin registry
  DuplicateInstance,
  InvalidManifest,
  CycleDetected,
  UnknownShell,
  // semantics
  UnknownStandardTag,
  LengthMismatch,
  EncodingError,
  DictionaryConflict,
  // orders bus and frames
  DuplicateOrder,
  ValidationFailed,
  UnknownStation,
  IllegalTransition,
  UnknownOrder,
  WrongState,
  DanglingArchiveRef,
  OversizedPayload,
  BadMagic,
  BadVersion,
  BadChannel,
  // archive
  NonCanonicalOrder,
  TruncatedElement,
  BadPreamble,
  DuplicateUID,
  UnknownUID,
  IoError,
  // gateway
  UnmappedField,
  InvalidMapping,
  // sovereignty
  InvalidPolicy,
  UnknownContract,
  WrongConsumer,
  PolicyExhausted,
  PolicyExpired,
  ForwardProhibited,
  UncertifiedConnector,
  // rami
  UnknownComponent,
  // plantsim
  ConfigInvalid,
  ScenarioDeadlock,
  GridShapeMismatch,
  FaultNotApplicable,
};

inline constexpr Errc kAllErrc[] = {
    Errc::MalformedToken,     Errc::ParseError,         Errc::DuplicateInstance,
    Errc::InvalidManifest,    Errc::CycleDetected,      Errc::UnknownShell,
    Errc::UnknownStandardTag, Errc::LengthMismatch,     Errc::EncodingError,
    Errc::DictionaryConflict, Errc::DuplicateOrder,     Errc::ValidationFailed,
    Errc::UnknownStation,     Errc::IllegalTransition,  Errc::UnknownOrder,
    Errc::WrongState,         Errc::DanglingArchiveRef, Errc::OversizedPayload,
    Errc::BadMagic,           Errc::BadVersion,         Errc::BadChannel,
    Errc::NonCanonicalOrder,  Errc::TruncatedElement,   Errc::BadPreamble,
    Errc::DuplicateUID,       Errc::UnknownUID,         Errc::IoError,
    Errc::UnmappedField,      Errc::InvalidMapping,     Errc::InvalidPolicy,
    Errc::UnknownContract,    Errc::WrongConsumer,      Errc::PolicyExhausted,
    Errc::PolicyExpired,      Errc::ForwardProhibited,  Errc::UncertifiedConnector,
    Errc::UnknownComponent,   Errc::ConfigInvalid,      Errc::ScenarioDeadlock,
    Errc::GridShapeMismatch,  Errc::FaultNotApplicable,
};

[[nodiscard]] std::string_view to_string(Errc code) noexcept;
[[nodiscard]] std::optional<Errc> errc_from_string(std::string_view name) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> offset = std::nullopt);

  [[nodiscard]] Errc code() const noexcept { return code_; }
  /// Byte offset of the first violation, for parse/decode failures.
  [[nodiscard]] std::optional<std::size_t> offset() const noexcept { return offset_; }
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::optional<std::size_t> offset_;
  std::string detail_;
};

}  // namespace nde4
