/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/inspection.hpp"

#include <fmt/format.h>

#include "nde4/error.hpp"
#include "nde4/semantics.hpp"

namespace nde4 {

Verdict VerdictRule::apply(std::optional<float> max_amplitude) const noexcept {
  if (!max_amplitude) return Verdict::Accept;
  if (*max_amplitude >= reject_threshold) return Verdict::Reject;
  if (rework_threshold && *max_amplitude >= *rework_threshold) return Verdict::Rework;
  return Verdict::Accept;
}

void Procedure::validate() const {
  auto fail = [&](std::string_view why) {
    throw Error(Errc::ConfigInvalid, fmt::format("procedure '{}': {}", procedure_id, why));
  };
  if (!is_serial_token(procedure_id)) fail("procedure_id is not a token");
  if (!is_method_code(method)) fail(fmt::format("unknown method code '{}'", method));
  if (rows == 0 || cols == 0) fail("grid must have at least one cell");
  if (!(reject_threshold > 0.0 && reject_threshold <= 100.0)) fail("reject threshold outside (0, 100]");
  if (rework_threshold && !(*rework_threshold > 0.0 && *rework_threshold < reject_threshold)) {
    fail("rework threshold outside (0, reject threshold)");
  }
}

void ProcedureCatalog::add(Procedure procedure) {
  procedure.validate();
  auto id = procedure.procedure_id;
  if (!procedures_.emplace(id, std::move(procedure)).second) {
    throw Error(Errc::ConfigInvalid, fmt::format("procedure '{}' defined twice", id));
  }
}

const Procedure* ProcedureCatalog::find(std::string_view procedure_id) const noexcept {
  auto it = procedures_.find(procedure_id);
  return it == procedures_.end() ? nullptr : &it->second;
}

}  // namespace nde4
