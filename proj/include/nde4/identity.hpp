/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <compare>
#include <functional>
#include <string>
#include <string_view>
#include <variant>

namespace nde4 {

inline constexpr std::size_t kMaxTokenLength = 64;

/// [a-z0-9-]{1,64}: namespaces and type names.
[[nodiscard]] bool is_name_token(std::string_view token) noexcept;
/// [A-Za-z0-9-]{1,64}: serial numbers, order ids, procedure ids.
[[nodiscard]] bool is_serial_token(std::string_view token) noexcept;

/// Identifier of an asset type ("drill"). Immutable; ordered by canonical form.
class TypeId {
 public:
  TypeId() = default;

  [[nodiscard]] const std::string& ns() const noexcept { return ns_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  /// "urn:nde4:type:<ns>:<name>"
  [[nodiscard]] const std::string& canonical() const noexcept { return canonical_; }

  friend bool operator==(const TypeId& a, const TypeId& b) { return a.canonical_ == b.canonical_; }
  friend std::strong_ordering operator<=>(const TypeId& a, const TypeId& b) {
    return a.canonical_ <=> b.canonical_;
  }

 private:
  friend TypeId mint_type_id(std::string_view, std::string_view);
  std::string ns_;
  std::string name_;
  std::string canonical_;
};

/// Identifier of one built asset ("drill #25").
class InstanceId {
 public:
  InstanceId() = default;

  [[nodiscard]] const TypeId& type_id() const noexcept { return type_; }
  [[nodiscard]] const std::string& serial() const noexcept { return serial_; }
  /// "urn:nde4:inst:<ns>:<name>:<serial>"
  [[nodiscard]] const std::string& canonical() const noexcept { return canonical_; }

  friend bool operator==(const InstanceId& a, const InstanceId& b) {
    return a.canonical_ == b.canonical_;
  }
  friend std::strong_ordering operator<=>(const InstanceId& a, const InstanceId& b) {
    return a.canonical_ <=> b.canonical_;
  }

 private:
  friend InstanceId mint_instance_id(const TypeId&, std::string_view);
  TypeId type_;
  std::string serial_;
  std::string canonical_;
};

/// Throws Error(MalformedToken).
[[nodiscard]] TypeId mint_type_id(std::string_view ns, std::string_view name);
/// Throws Error(MalformedToken).
[[nodiscard]] InstanceId mint_instance_id(const TypeId& type, std::string_view serial);

using AnyId = std::variant<TypeId, InstanceId>;

/// Inverse of canonical(). Throws Error(ParseError) with the byte offset of
/// the first violation.
[[nodiscard]] AnyId parse_id(std::string_view text);
[[nodiscard]] TypeId parse_type_id(std::string_view text);
[[nodiscard]] InstanceId parse_instance_id(std::string_view text);

}  // namespace nde4

template <>
struct std::hash<nde4::TypeId> {
  std::size_t operator()(const nde4::TypeId& id) const noexcept {
    return std::hash<std::string>{}(id.canonical());
  }
};

template <>
struct std::hash<nde4::InstanceId> {
  std::size_t operator()(const nde4::InstanceId& id) const noexcept {
    return std::hash<std::string>{}(id.canonical());
  }
};
