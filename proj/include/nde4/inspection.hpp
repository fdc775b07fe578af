/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "nde4/orders.hpp"

namespace nde4 {

/// How a verdict follows from the largest indication amplitude.
struct VerdictRule {
  double reject_threshold = 50.0;
  std::optional<double> rework_threshold;

  [[nodiscard]] Verdict apply(std::optional<float> max_amplitude) const noexcept;
};

/// Inspection procedure: device settings plus the evaluation rule.
struct Procedure {
  std::string procedure_id;
  std::string method = "UT";
  std::uint16_t rows = 1;
  std::uint16_t cols = 1;
  /// percent-FSH, in (0, 100].
  double reject_threshold = 50.0;
  std::optional<double> rework_threshold;
  /// Archived objects a report must reference.
  std::size_t min_refs = 1;

  /// Throws Error(ConfigInvalid).
  void validate() const;
  [[nodiscard]] VerdictRule verdict_rule() const { return {reject_threshold, rework_threshold}; }

  friend bool operator==(const Procedure&, const Procedure&) = default;
};

class ProcedureCatalog {
 public:
  /// Throws Error(ConfigInvalid) on an invalid or duplicate procedure.
  void add(Procedure procedure);
  [[nodiscard]] const Procedure* find(std::string_view procedure_id) const noexcept;
  [[nodiscard]] std::size_t size() const noexcept { return procedures_.size(); }

 private:
  std::map<std::string, Procedure, std::less<>> procedures_;
};

/// One evaluated defect: the peak cell of a connected region.
struct Indication {
  std::uint16_t row = 0;
  std::uint16_t col = 0;
  /// percent-FSH
  float amplitude = 0.0F;

  friend bool operator==(const Indication&, const Indication&) = default;
};

}  // namespace nde4
