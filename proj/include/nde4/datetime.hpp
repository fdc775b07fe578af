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

/// UTC timestamp with the fixed 15-byte text form "YYYYMMDDThhmmss".
struct DateTime {
  int year = 2020;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;

  friend auto operator<=>(const DateTime&, const DateTime&) = default;

  [[nodiscard]] std::string str() const;
  [[nodiscard]] std::int64_t to_epoch_seconds() const;
  [[nodiscard]] static DateTime from_epoch_seconds(std::int64_t seconds);

  /// Throws Error(EncodingError) on anything but a valid 15-byte form.
  [[nodiscard]] static DateTime parse(std::string_view text);
  [[nodiscard]] static std::optional<DateTime> try_parse(std::string_view text) noexcept;
};

inline constexpr std::size_t kDateTimeSize = 15;

/// Simulation time. One tick is one second after 20200101T000000.
/// Nothing in the library reads the wall clock.
class LogicalClock {
 public:
  using Tick = std::int64_t;

  [[nodiscard]] Tick tick() const noexcept { return tick_; }
  [[nodiscard]] DateTime now() const { return at(tick_); }
  /// Never moves backwards.
  void advance_to(Tick t) noexcept {
    if (t > tick_) tick_ = t;
  }
  void advance_by(Tick dt) noexcept { advance_to(tick_ + dt); }

  [[nodiscard]] static DateTime epoch();
  [[nodiscard]] static DateTime at(Tick t);

 private:
  Tick tick_ = 0;
};

}  // namespace nde4
