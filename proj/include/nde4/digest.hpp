/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "nde4/bytes.hpp"

namespace nde4 {

/// SHA-256.
using Digest = std::array<std::uint8_t, 32>;

[[nodiscard]] Digest sha256(ByteView data);
[[nodiscard]] std::string to_hex(const Digest& digest);

}  // namespace nde4
