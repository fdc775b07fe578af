/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace nde4 {

/// (group, element) address of a data element.
struct TagCode {
  std::uint16_t group = 0;
  std::uint16_t element = 0;

  friend auto operator<=>(const TagCode&, const TagCode&) = default;

  /// Odd groups from 0x0009 up belong to vendors.
  [[nodiscard]] constexpr bool is_private() const noexcept { return group >= 0x0009 && (group & 1U) != 0; }
  /// "(0020,0001)"
  [[nodiscard]] std::string str() const;
};

/// Accepts "GGGG,EEEE" or "(GGGG,EEEE)" in hex.
[[nodiscard]] std::optional<TagCode> parse_tag(std::string_view text) noexcept;

namespace tags {

inline constexpr TagCode kObjectUid{0x0008, 0x0001};
inline constexpr TagCode kCreated{0x0008, 0x0002};
inline constexpr TagCode kMethod{0x0008, 0x0010};
inline constexpr TagCode kOrderExtras{0x0009, 0x0001};
inline constexpr TagCode kComponentSerial{0x0010, 0x0001};
inline constexpr TagCode kComponentType{0x0010, 0x0002};
inline constexpr TagCode kOrderId{0x0020, 0x0001};
inline constexpr TagCode kProcedureId{0x0020, 0x0002};
inline constexpr TagCode kDevice{0x0030, 0x0001};
inline constexpr TagCode kCalibrationDue{0x0030, 0x0002};
inline constexpr TagCode kRows{0x0040, 0x0001};
inline constexpr TagCode kCols{0x0040, 0x0002};
inline constexpr TagCode kAmplitudeGrid{0x0040, 0x0003};
inline constexpr TagCode kBulkPayload{0x7FE0, 0x0010};

inline constexpr TagCode kMandatory[] = {kObjectUid, kMethod, kComponentSerial, kOrderId};

}  // namespace tags
}  // namespace nde4
