/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include <thread>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "nde4/registry.hpp"
#include "support.hpp"

namespace nde4::test {
namespace {

using namespace tags;

const TypeId kStation = mint_type_id("acme", "ut-scanner");

InstanceId station(int i) { return mint_instance_id(kStation, fmt::format("s{}", i)); }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "nothing thrown";
  return Errc::IoError;
}

TEST(Registry, ResolveReturnsTheRegisteredManifest) {
  TwinRegistry reg;
  Manifest m = station_manifest(station(1), {"UT", "RT"});
  m.data_refs.push_back({kOrderId, "orders/acme"});
  const ShellHandle h = reg.register_shell(m);
  EXPECT_EQ(h.id, station(1));
  EXPECT_EQ(h.registration_index, 0U);
  EXPECT_EQ(reg.resolve(station(1)), m);
  EXPECT_TRUE(reg.resolve(station(1)).advertises("UT"));
  EXPECT_FALSE(reg.resolve(station(1)).advertises("ET"));
  EXPECT_EQ(reg.resolve(station(1)).methods(), (std::vector<std::string>{"UT", "RT"}));
  EXPECT_EQ(code_of([&] { (void)reg.resolve(station(2)); }), Errc::UnknownShell);
  EXPECT_EQ(code_of([&] { reg.register_shell(m); }), Errc::DuplicateInstance);
  EXPECT_EQ(inspection_service_name("UT"), "inspect-ut");
}

TEST(Registry, InvalidManifestsAreRejectedWithFindings) {
  TwinRegistry reg;
  Manifest no_id = station_manifest(station(1), {"UT"});
  no_id.asset_instance_id.reset();
  try {
    reg.register_shell(no_id);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.code(), Errc::InvalidManifest);
    EXPECT_TRUE(e.report().contains(FindingKind::MissingHeaderId));
  }
  Manifest dup = station_manifest(station(1), {"UT"});
  dup.data_refs = {{kOrderId, "a"}, {kOrderId, "a"}};
  EXPECT_TRUE(validate_manifest(dup).contains(FindingKind::DuplicateBodyEntry));
  Manifest unknown = station_manifest(station(1), {"UT"});
  unknown.data_refs = {{TagCode{0x7778, 0x0001}, "a"}};
  EXPECT_TRUE(validate_manifest(unknown).contains(FindingKind::UnknownSemanticTag));
  Manifest priv = station_manifest(station(1), {"UT"});
  priv.data_refs = {{TagCode{0x7777, 0x0001}, "a"}};
  EXPECT_TRUE(validate_manifest(priv).contains(FindingKind::PrivateTag));
  EXPECT_TRUE(validate_manifest(priv).ok());
  EXPECT_EQ(reg.size(), 0U);
}

TEST(Registry, DanglingChildIsOnlyAWarning) {
  TwinRegistry reg;
  Manifest plant = station_manifest(mint_instance_id(mint_type_id("acme", "plant"), "p1"), {});
  plant.children = {station(9)};
  const ShellHandle h = reg.register_shell(plant);
  EXPECT_TRUE(h.report.contains(FindingKind::DanglingChild));
  EXPECT_TRUE(h.report.ok());
  EXPECT_FALSE(h.report.clean());
  reg.register_shell(station_manifest(station(9), {"UT"}));
  EXPECT_TRUE(reg.validate(reg.resolve(plant.asset_instance_id.value())).clean());
}

TEST(Registry, NestAddsEdgesAndRejectsCycles) {
  TwinRegistry reg;
  for (int i = 0; i < 50; ++i) reg.register_shell(station_manifest(station(i), {"UT"}));
  for (int i = 0; i + 1 < 50; ++i) reg.nest(station(i), station(i + 1));
  reg.nest(station(0), station(1));  // idempotent
  EXPECT_EQ(reg.resolve(station(0)).children, std::vector<InstanceId>{station(1)});
  EXPECT_EQ(code_of([&] { reg.nest(station(49), station(0)); }), Errc::CycleDetected);
  EXPECT_EQ(code_of([&] { reg.nest(station(7), station(7)); }), Errc::CycleDetected);
  EXPECT_EQ(code_of([&] { reg.nest(station(7), station(99)); }), Errc::UnknownShell);
  EXPECT_TRUE(reg.resolve(station(49)).children.empty());

  Manifest closing = station_manifest(station(50), {"UT"});
  closing.children = {station(0)};
  reg.register_shell(closing);  // 50 -> 0 -> ... -> 49 is still acyclic
  EXPECT_EQ(code_of([&] { reg.nest(station(49), station(50)); }), Errc::CycleDetected);
}

TEST(Registry, ListKeepsRegistrationOrder) {
  TwinRegistry reg;
  std::vector<InstanceId> ids;
  for (int i : {5, 3, 9, 1}) {
    ids.push_back(station(i));
    EXPECT_EQ(reg.register_shell(station_manifest(station(i), {})).registration_index, ids.size() - 1);
  }
  EXPECT_EQ(reg.list(), ids);
  EXPECT_TRUE(reg.contains(station(9)));
  EXPECT_FALSE(reg.contains(station(2)));
}

TEST(Manifest, JsonRoundTrip) {
  Rng rng(5);
  for (int n = 0; n < 200; ++n) {
    Manifest m = station_manifest(station(n), {"UT", "RT", "ET"});
    m.display_name = fmt::format("Station \"{}\" ü", n);
    for (std::uint64_t k = 0; k < rng.below(4); ++k) m.data_refs.push_back({kOrderId, fmt::format("o{}", k)});
    for (std::uint64_t k = 0; k < rng.below(3); ++k) m.children.push_back(station(1000 + static_cast<int>(k)));
    m.services.push_back({"custom", {kOrderId}, {kMethod, kDevice}});
    ASSERT_EQ(manifest_from_json(manifest_to_json(m)), m);
  }
}

TEST(Manifest, ParseErrorsCarryOffsets) {
  const std::string text = manifest_to_json(station_manifest(station(1), {"UT"}));
  try {
    (void)manifest_from_json(text.substr(0, text.size() / 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_TRUE(e.offset().has_value());
  }
  EXPECT_EQ(code_of([] { (void)manifest_from_json("[]"); }), Errc::ParseError);
}

TEST(Registry, ConcurrentReadersSeeCompleteManifests) {
  TwinRegistry reg;
  reg.register_shell(station_manifest(station(0), {"UT"}));
  std::vector<std::thread> threads;
  for (int w = 0; w < 4; ++w) {
    threads.emplace_back([&, w] {
      for (int i = 1; i <= 50; ++i) reg.register_shell(station_manifest(station(w * 100 + i), {"UT", "RT"}));
    });
  }
  for (int r = 0; r < 4; ++r) {
    threads.emplace_back([&] {
      for (int i = 0; i < 500; ++i) {
        for (const auto& id : reg.list()) {
          const Manifest m = reg.resolve(id);
          EXPECT_EQ(m.asset_instance_id, id);
          EXPECT_FALSE(m.services.empty());
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(reg.size(), 201U);
}

}  // namespace
}  // namespace nde4::test
