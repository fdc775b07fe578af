/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include <gtest/gtest.h>

#include "nde4/rami.hpp"
#include "support.hpp"

namespace nde4::test {
namespace {

using L = Layer;
using C = Lifecycle;
using H = Hierarchy;

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "nothing thrown";
  return Errc::IoError;
}

const L kMiddle[] = {L::Communication, L::Information};
const C kInstances[] = {C::InstProd, C::InstUse};
const C kTypes[] = {C::TypeDev, C::TypeUse};

TEST(Rami, OrdersBusCoversInstancesUpToPlant) {
  const H levels[] = {H::Process, H::Field, H::Control, H::ShopFloor, H::Plant};
  EXPECT_EQ(LociRegistry::standard().locate("orders-bus").cells, product(kMiddle, kInstances, levels));
}

TEST(Rami, GatewayAddsEnterprise) {
  const H levels[] = {H::Process, H::Field, H::Control, H::ShopFloor, H::Plant, H::Enterprise};
  const CellSet& cells = LociRegistry::standard().locate("gateway").cells;
  EXPECT_EQ(cells, product(kMiddle, kInstances, levels));
  for (const auto& cell : cells) EXPECT_NE(cell.hierarchy, H::ConnectedWorld);
}

TEST(Rami, PlantDesignDocCoversTheLeftHalf) {
  EXPECT_EQ(LociRegistry::standard().locate("plantdesign-doc").cells, product(kMiddle, kTypes, kHierarchies));
}

TEST(Rami, SovereigntyClosesTheConnectedWorldGap) {
  const LociRegistry& reg = LociRegistry::standard();
  const CellSet required = product(kMiddle, kInstances, kHierarchies);
  const std::vector<ComponentLocus> two = {reg.locate("orders-bus"), reg.locate("gateway")};
  const H cw[] = {H::ConnectedWorld};
  EXPECT_EQ(coverage_check(required, two), product(kMiddle, kInstances, cw));
  std::vector<ComponentLocus> three = two;
  three.push_back(reg.locate("sovereignty"));
  EXPECT_TRUE(coverage_check(required, three).empty());
  EXPECT_TRUE(coverage_check({}, two).empty());
  EXPECT_TRUE(coverage_check({}, {}).empty());
}

TEST(Rami, CoverageEqualsCellWalk) {
  Rng rng(1000);
  for (int i = 0; i < 1000; ++i) {
    const CellSet required = random_cells(rng, 0.3);
    std::vector<ComponentLocus> loci(rng.below(4));
    for (auto& l : loci) l.cells = random_cells(rng, 0.4);
    ASSERT_EQ(coverage_check(required, loci), oracle_gaps(required, loci)) << i;
  }
}

TEST(Rami, Patterns) {
  EXPECT_EQ(all_cells().size(), 168U);
  EXPECT_EQ(expand_cells("*/*/*"), all_cells());
  EXPECT_EQ(expand_cells("ASSET/*/FIELD").size(), 4U);
  const CellSet one = expand_cells("BUSINESS/INST_USE/CONNECTED_WORLD");
  ASSERT_EQ(one.size(), 1U);
  EXPECT_EQ(one.begin()->str(), "BUSINESS/INST_USE/CONNECTED_WORLD");
  try {
    (void)expand_cells("ASSET/INST_*/FIELD");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_EQ(e.offset(), 6U);
  }
  EXPECT_EQ(code_of([] { (void)expand_cells("ASSET/INST_USE"); }), Errc::ParseError);
  for (L l : kLayers) EXPECT_EQ(layer_from_string(to_string(l)), l);
  for (C c : kLifecycles) EXPECT_EQ(lifecycle_from_string(to_string(c)), c);
  for (H h : kHierarchies) EXPECT_EQ(hierarchy_from_string(to_string(h)), h);
}

TEST(Rami, RegistryRules) {
  LociRegistry reg;
  EXPECT_EQ(code_of([&] { (void)reg.locate("orders-bus"); }), Errc::UnknownComponent);
  EXPECT_EQ(code_of([&] { reg.add({"empty", {}}); }), Errc::ConfigInvalid);
  EXPECT_EQ(code_of([&] { reg.add({"bad name", expand_cells("ASSET/*/*")}); }), Errc::ConfigInvalid);
  reg.add({"x", expand_cells("ASSET/*/*")});
  reg.add({"x", expand_cells("BUSINESS/*/*")});
  EXPECT_EQ(reg.locate("x").cells, expand_cells("BUSINESS/*/*"));
  EXPECT_EQ(reg.components(), std::vector<std::string>{"x"});
}

TEST(Rami, LociTsvRoundTrip) {
  const LociRegistry& reg = LociRegistry::standard();
  const LociRegistry back = LociRegistry::from_tsv(reg.to_tsv());
  EXPECT_EQ(back.components(), reg.components());
  for (const auto& name : reg.components()) EXPECT_EQ(back.locate(name), reg.locate(name));
  EXPECT_EQ(code_of([] { (void)LociRegistry::from_tsv("x\tASSET\tNOPE\tFIELD\n"); }), Errc::ParseError);
}

}  // namespace
}  // namespace nde4::test
