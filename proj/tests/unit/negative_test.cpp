/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include <set>

#include <gtest/gtest.h>

#include "support.hpp"

namespace nde4::test {
namespace {

TEST(NegativePaths, EveryCaseRaisesItsError) {
  for (const auto& c : negative_cases()) {
    EXPECT_EQ(check_negative_case(c), "") << c.operation;
  }
}

TEST(NegativePaths, EveryErrorCodeIsTriggered) {
  std::set<Errc> seen;
  for (const auto& c : negative_cases()) seen.insert(c.expected);
  for (Errc e : kAllErrc) EXPECT_EQ(seen.count(e), 1U) << to_string(e) << " has no triggering case";
}

TEST(NegativePaths, ErrorNamesRoundTrip) {
  for (Errc e : kAllErrc) EXPECT_EQ(errc_from_string(to_string(e)), e);
  EXPECT_FALSE(errc_from_string("NoSuchError").has_value());
}

}  // namespace
}  // namespace nde4::test
