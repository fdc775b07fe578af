/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/digest.hpp"

#include <openssl/sha.h>

#include <fmt/format.h>

namespace nde4 {

Digest sha256(ByteView data) {
  Digest d{};
  SHA256(data.data(), data.size(), d.data());
  return d;
}

std::string to_hex(const Digest& digest) {
  std::string out;
  out.reserve(64);
  for (auto b : digest) out += fmt::format("{:02x}", b);
  return out;
}

}  // namespace nde4
