/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

// Shared ERROR-body encoding for the wire handlers.

#include <nlohmann/json.hpp>

#include "nde4/bytes.hpp"
#include "nde4/error.hpp"

namespace nde4::detail {

inline nlohmann::json error_json(const Error& e) {
  nlohmann::json j{{"error", std::string(to_string(e.code()))}, {"message", e.detail()}};
  if (e.offset()) j["offset"] = *e.offset();
  return j;
}

inline Bytes error_body(const Error& e) { return to_bytes(error_json(e).dump()); }

[[noreturn]] inline void rethrow_error_json(const nlohmann::json& j) {
  auto code = errc_from_string(j.value("error", std::string{}));
  std::optional<std::size_t> offset;
  if (j.contains("offset")) offset = j["offset"].get<std::size_t>();
  throw Error(code.value_or(Errc::IoError), j.value("message", std::string{}), offset);
}

[[noreturn]] inline void rethrow_error_body(ByteView body) {
  auto j = nlohmann::json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::IoError, "unreadable remote error");
  rethrow_error_json(j);
}

}  // namespace nde4::detail
