/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/datetime.hpp"

#include <fmt/format.h>

#include "nde4/error.hpp"

namespace nde4 {
namespace {

// Proleptic Gregorian day count, after H. Hinnant's civil-date algorithms.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = static_cast<int>(static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2));
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

}  // namespace

std::string DateTime::str() const {
  return fmt::format("{:04}{:02}{:02}T{:02}{:02}{:02}", year, month, day, hour, minute, second);
}

std::int64_t DateTime::to_epoch_seconds() const {
  return days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * 86400 +
         hour * 3600 + minute * 60 + second;
}

DateTime DateTime::from_epoch_seconds(std::int64_t seconds) {
  std::int64_t days = seconds / 86400;
  std::int64_t rem = seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  DateTime dt;
  civil_from_days(days, dt.year, dt.month, dt.day);
  dt.hour = static_cast<int>(rem / 3600);
  dt.minute = static_cast<int>(rem % 3600 / 60);
  dt.second = static_cast<int>(rem % 60);
  return dt;
}

std::optional<DateTime> DateTime::try_parse(std::string_view text) noexcept {
  if (text.size() != kDateTimeSize || text[8] != 'T') return std::nullopt;
  for (std::size_t i = 0; i < kDateTimeSize; ++i) {
    if (i == 8) continue;
    if (text[i] < '0' || text[i] > '9') return std::nullopt;
  }
  auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (text[i] - '0');
    return v;
  };
  DateTime dt{num(0, 4), num(4, 2), num(6, 2), num(9, 2), num(11, 2), num(13, 2)};
  if (dt.month < 1 || dt.month > 12) return std::nullopt;
  if (dt.day < 1 || dt.day > days_in_month(dt.year, dt.month)) return std::nullopt;
  if (dt.hour > 23 || dt.minute > 59 || dt.second > 59) return std::nullopt;
  return dt;
}

DateTime DateTime::parse(std::string_view text) {
  if (auto dt = try_parse(text)) return *dt;
  throw Error(Errc::EncodingError, fmt::format("invalid DATETIME '{}'", text));
}

DateTime LogicalClock::epoch() { return DateTime{2020, 1, 1, 0, 0, 0}; }

DateTime LogicalClock::at(Tick t) {
  static const std::int64_t base = epoch().to_epoch_seconds();
  return DateTime::from_epoch_seconds(base + t);
}

}  // namespace nde4
