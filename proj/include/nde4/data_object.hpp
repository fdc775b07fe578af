/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nde4/bytes.hpp"
#include "nde4/tag.hpp"

namespace nde4 {

struct Element {
  TagCode tag;
  Bytes value;

  friend bool operator==(const Element&, const Element&) = default;
};

/// Tagged dataset: elements kept strictly ascending by tag.
class DataObject {
 public:
  DataObject() = default;
  /// Throws Error(NonCanonicalOrder) unless tags are strictly ascending.
  explicit DataObject(std::vector<Element> elements);

  [[nodiscard]] const std::vector<Element>& elements() const noexcept { return elements_; }
  [[nodiscard]] const Element* find(TagCode tag) const noexcept;
  [[nodiscard]] std::optional<std::string> text(TagCode tag) const;

  /// Inserts or replaces, keeping canonical order.
  void set(TagCode tag, Bytes value);
  void set_text(TagCode tag, std::string_view value) { set(tag, to_bytes(value)); }
  void merge(const std::vector<Element>& seed);

  [[nodiscard]] std::optional<std::string> uid() const { return text(tags::kObjectUid); }
  [[nodiscard]] std::optional<std::string> order_id() const { return text(tags::kOrderId); }
  [[nodiscard]] std::optional<std::string> component_serial() const {
    return text(tags::kComponentSerial);
  }
  [[nodiscard]] std::optional<std::string> method() const { return text(tags::kMethod); }

  friend bool operator==(const DataObject&, const DataObject&) = default;

 private:
  std::vector<Element> elements_;
};

inline constexpr std::string_view kObjectMagic = "NDEO";
inline constexpr std::uint8_t kObjectVersion = 1;
inline constexpr std::size_t kObjectPreambleSize = 5;
inline constexpr std::size_t kElementHeaderSize = 8;

/// Preamble "NDEO" + version, then group u16 LE, element u16 LE,
/// length u32 LE, value bytes per element.
[[nodiscard]] Bytes encode_object(const DataObject& obj);
/// Throws Error(BadPreamble | TruncatedElement | NonCanonicalOrder) with the
/// byte offset of the offending element.
[[nodiscard]] DataObject decode_object(ByteView bytes);

/// [A-Za-z0-9._-]{1,64}; safe as a file name.
[[nodiscard]] bool is_object_uid(std::string_view uid) noexcept;

}  // namespace nde4
