/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nde4 {

// The three axes of the reference cube, in axis order.
enum class Layer { Asset, Integration, Communication, Information, Functional, Business };
enum class Lifecycle { TypeDev, TypeUse, InstProd, InstUse };
/// Automation pyramid levels plus the cross-company level on top.
enum class Hierarchy { Process, Field, Control, ShopFloor, Plant, Enterprise, ConnectedWorld };

inline constexpr Layer kLayers[] = {Layer::Asset,       Layer::Integration, Layer::Communication,
                                    Layer::Information, Layer::Functional,  Layer::Business};
inline constexpr Lifecycle kLifecycles[] = {Lifecycle::TypeDev, Lifecycle::TypeUse, Lifecycle::InstProd,
                                            Lifecycle::InstUse};
inline constexpr Hierarchy kHierarchies[] = {Hierarchy::Process,   Hierarchy::Field, Hierarchy::Control,
                                             Hierarchy::ShopFloor, Hierarchy::Plant, Hierarchy::Enterprise,
                                             Hierarchy::ConnectedWorld};

[[nodiscard]] std::string_view to_string(Layer v) noexcept;
[[nodiscard]] std::string_view to_string(Lifecycle v) noexcept;
[[nodiscard]] std::string_view to_string(Hierarchy v) noexcept;
[[nodiscard]] std::optional<Layer> layer_from_string(std::string_view s) noexcept;
[[nodiscard]] std::optional<Lifecycle> lifecycle_from_string(std::string_view s) noexcept;
[[nodiscard]] std::optional<Hierarchy> hierarchy_from_string(std::string_view s) noexcept;

struct RamiCoordinate {
  Layer layer = Layer::Asset;
  Lifecycle lifecycle = Lifecycle::TypeDev;
  Hierarchy hierarchy = Hierarchy::Process;

  friend auto operator<=>(const RamiCoordinate&, const RamiCoordinate&) = default;

  /// "LAYER/LIFECYCLE/HIERARCHY"
  [[nodiscard]] std::string str() const;
};

using CellSet = std::set<RamiCoordinate>;

/// All 6 x 4 x 7 cells.
[[nodiscard]] const CellSet& all_cells();

/// "LAYER/LIFECYCLE/HIERARCHY" where any part may be "*".
/// Throws Error(ParseError) with the offset of the bad part.
[[nodiscard]] CellSet expand_cells(std::string_view pattern);
[[nodiscard]] CellSet product(std::span<const Layer> layers, std::span<const Lifecycle> lifecycles,
                              std::span<const Hierarchy> hierarchies);

struct ComponentLocus {
  std::string component;
  CellSet cells;

  friend bool operator==(const ComponentLocus&, const ComponentLocus&) = default;
};

/// required minus the union of every locus' cells.
[[nodiscard]] CellSet coverage_check(const CellSet& required, std::span<const ComponentLocus> loci);

/// Where each system component sits in the cube.
class LociRegistry {
 public:
  /// Throws Error(ConfigInvalid) for an empty cell set or a bad name;
  /// re-adding a component replaces it.
  void add(ComponentLocus locus);
  /// Throws Error(UnknownComponent).
  [[nodiscard]] const ComponentLocus& locate(std::string_view component) const;
  [[nodiscard]] bool contains(std::string_view component) const;
  [[nodiscard]] std::vector<std::string> components() const;

  /// Compiled-in copy of rami-loci.tsv.
  [[nodiscard]] static const LociRegistry& standard();
  /// Throws Error(ParseError | ConfigInvalid).
  [[nodiscard]] static LociRegistry from_tsv(std::string_view text);
  [[nodiscard]] std::string to_tsv() const;

 private:
  std::map<std::string, ComponentLocus, std::less<>> loci_;
};

}  // namespace nde4
