/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/rami.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>

#include "nde4/error.hpp"
#include "nde4/identity.hpp"

namespace nde4 {

namespace {

constexpr std::array<std::string_view, 6> kLayerNames = {"ASSET",       "INTEGRATION", "COMMUNICATION",
                                                         "INFORMATION", "FUNCTIONAL",  "BUSINESS"};
constexpr std::array<std::string_view, 4> kLifecycleNames = {"TYPE_DEV", "TYPE_USE", "INST_PROD", "INST_USE"};
constexpr std::array<std::string_view, 7> kHierarchyNames = {"PROCESS", "FIELD",      "CONTROL",        "SHOP_FLOOR",
                                                             "PLANT",   "ENTERPRISE", "CONNECTED_WORLD"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  auto it = std::find(names.begin(), names.end(), s);
  if (it == names.end()) return std::nullopt;
  return static_cast<E>(it - names.begin());
}

template <typename E, std::size_t N>
std::vector<E> expand_axis(const std::array<std::string_view, N>& names, std::string_view part,
                           std::size_t offset, std::string_view axis) {
  std::vector<E> out;
  if (part == "*") {
    for (std::size_t i = 0; i < N; ++i) out.push_back(static_cast<E>(i));
    return out;
  }
  auto v = lookup<E>(names, part);
  if (!v) throw Error(Errc::ParseError, fmt::format("unknown {} '{}'", axis, part), offset);
  out.push_back(*v);
  return out;
}

}  // namespace

std::string_view to_string(Layer v) noexcept { return kLayerNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Lifecycle v) noexcept { return kLifecycleNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Hierarchy v) noexcept { return kHierarchyNames[static_cast<std::size_t>(v)]; }
std::optional<Layer> layer_from_string(std::string_view s) noexcept { return lookup<Layer>(kLayerNames, s); }
std::optional<Lifecycle> lifecycle_from_string(std::string_view s) noexcept {
  return lookup<Lifecycle>(kLifecycleNames, s);
}
std::optional<Hierarchy> hierarchy_from_string(std::string_view s) noexcept {
  return lookup<Hierarchy>(kHierarchyNames, s);
}

std::string RamiCoordinate::str() const {
  return fmt::format("{}/{}/{}", to_string(layer), to_string(lifecycle), to_string(hierarchy));
}

CellSet product(std::span<const Layer> layers, std::span<const Lifecycle> lifecycles,
                std::span<const Hierarchy> hierarchies) {
  CellSet out;
  for (Layer l : layers) {
    for (Lifecycle c : lifecycles) {
      for (Hierarchy h : hierarchies) out.insert({l, c, h});
    }
  }
  return out;
}

const CellSet& all_cells() {
  static const CellSet cells = product(kLayers, kLifecycles, kHierarchies);
  return cells;
}

CellSet expand_cells(std::string_view pattern) {
  auto s1 = pattern.find('/');
  auto s2 = s1 == std::string_view::npos ? s1 : pattern.find('/', s1 + 1);
  auto extra = s2 == std::string_view::npos ? s2 : pattern.find('/', s2 + 1);
  if (s2 == std::string_view::npos || extra != std::string_view::npos) {
    throw Error(Errc::ParseError, fmt::format("'{}' is not LAYER/LIFECYCLE/HIERARCHY", pattern),
                extra != std::string_view::npos ? extra : pattern.size());
  }
  auto layers = expand_axis<Layer>(kLayerNames, pattern.substr(0, s1), 0, "layer");
  auto lifecycles = expand_axis<Lifecycle>(kLifecycleNames, pattern.substr(s1 + 1, s2 - s1 - 1), s1 + 1, "lifecycle");
  auto hierarchies = expand_axis<Hierarchy>(kHierarchyNames, pattern.substr(s2 + 1), s2 + 1, "hierarchy");
  return product(layers, lifecycles, hierarchies);
}

CellSet coverage_check(const CellSet& required, std::span<const ComponentLocus> loci) {
  CellSet gaps;
  for (const auto& cell : required) {
    const bool covered =
        std::any_of(loci.begin(), loci.end(), [&](const ComponentLocus& l) { return l.cells.count(cell) != 0; });
    if (!covered) gaps.insert(cell);
  }
  return gaps;
}

void LociRegistry::add(ComponentLocus locus) {
  if (!is_name_token(locus.component)) {
    throw Error(Errc::ConfigInvalid, fmt::format("'{}' is not a component name", locus.component));
  }
  if (locus.cells.empty()) throw Error(Errc::ConfigInvalid, fmt::format("locus of '{}' is empty", locus.component));
  auto name = locus.component;
  loci_[name] = std::move(locus);
}

const ComponentLocus& LociRegistry::locate(std::string_view component) const {
  auto it = loci_.find(component);
  if (it == loci_.end()) throw Error(Errc::UnknownComponent, fmt::format("no locus for '{}'", component));
  return it->second;
}

bool LociRegistry::contains(std::string_view component) const { return loci_.find(component) != loci_.end(); }

std::vector<std::string> LociRegistry::components() const {
  std::vector<std::string> out;
  for (const auto& [name, l] : loci_) out.push_back(name);
  return out;
}

const LociRegistry& LociRegistry::standard() {
  static const LociRegistry reg = [] {
    using H = Hierarchy;
    const Layer middle[] = {Layer::Communication, Layer::Information};
    const Lifecycle instance[] = {Lifecycle::InstProd, Lifecycle::InstUse};
    const Lifecycle type[] = {Lifecycle::TypeDev, Lifecycle::TypeUse};
    const H pyramid[] = {H::Process, H::Field, H::Control, H::ShopFloor, H::Plant};
    const H with_enterprise[] = {H::Process, H::Field, H::Control, H::ShopFloor, H::Plant, H::Enterprise};
    const H connected[] = {H::ConnectedWorld};

    LociRegistry r;
    r.add({"orders-bus", product(middle, instance, pyramid)});
    r.add({"gateway", product(middle, instance, with_enterprise)});
    r.add({"plantdesign-doc", product(middle, type, kHierarchies)});
    const Layer sov_layers[] = {Layer::Communication, Layer::Information, Layer::Business};
    r.add({"sovereignty", product(sov_layers, instance, connected)});
    const Layer archive_layers[] = {Layer::Information};
    const H archive_levels[] = {H::ShopFloor, H::Plant, H::Enterprise};
    r.add({"archive", product(archive_layers, instance, archive_levels)});
    const Layer twin_layers[] = {Layer::Asset, Layer::Integration, Layer::Information, Layer::Functional};
    const H twin_levels[] = {H::Field, H::Control, H::ShopFloor, H::Plant};
    r.add({"twin-registry", product(twin_layers, kLifecycles, twin_levels)});
    return r;
  }();
  return reg;
}

LociRegistry LociRegistry::from_tsv(std::string_view text) {
  std::map<std::string, CellSet> cells;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const std::size_t at = pos;
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    std::array<std::string_view, 4> cols;
    std::size_t start = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      auto tab = line.find('\t', start);
      if ((tab == std::string_view::npos) != (i == 3)) {
        throw Error(Errc::ParseError, "expected component<TAB>layer<TAB>lifecycle<TAB>hierarchy", at);
      }
      cols[i] = line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start);
      start = tab + 1;
    }
    auto l = layer_from_string(cols[1]);
    auto c = lifecycle_from_string(cols[2]);
    auto h = hierarchy_from_string(cols[3]);
    if (!l || !c || !h) throw Error(Errc::ParseError, fmt::format("unknown axis value in '{}'", line), at);
    cells[std::string(cols[0])].insert({*l, *c, *h});
  }
  LociRegistry r;
  for (auto& [name, set] : cells) r.add({name, std::move(set)});
  return r;
}

std::string LociRegistry::to_tsv() const {
  std::string out = "#component\tlayer\tlifecycle\thierarchy\n";
  for (const auto& [name, locus] : loci_) {
    for (const auto& c : locus.cells) {
      out += fmt::format("{}\t{}\t{}\t{}\n", name, to_string(c.layer), to_string(c.lifecycle), to_string(c.hierarchy));
    }
  }
  return out;
}

}  // namespace nde4
