/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "nde4/identity.hpp"
#include "nde4/semantics.hpp"
#include "nde4/tag.hpp"
#include "nde4/validation.hpp"

namespace nde4 {

struct DataRef {
  TagCode semantic_tag;
  /// Archive object UID or orders-bus topic.
  std::string locator;

  friend bool operator==(const DataRef&, const DataRef&) = default;
};

struct ServiceDesc {
  std::string service_name;
  std::vector<TagCode> inputs;
  std::vector<TagCode> outputs;

  friend bool operator==(const ServiceDesc&, const ServiceDesc&) = default;
};

/// Asset Administration Shell manifest: header IDs plus a body listing the
/// asset's data, services and nested shells.
///
/// Header IDs are optional in the type so that an incomplete document can be
/// loaded and reported on; validation rejects a manifest missing either.
struct Manifest {
  std::optional<TypeId> shell_type_id;
  std::optional<InstanceId> asset_instance_id;
  std::string display_name;
  std::vector<DataRef> data_refs;
  std::vector<ServiceDesc> services;
  std::vector<InstanceId> children;

  /// Method codes advertised by services named "inspect-<method>".
  [[nodiscard]] std::vector<std::string> methods() const;
  [[nodiscard]] bool advertises(std::string_view method) const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Service name advertising an inspection method: "inspect-ut" for "UT".
[[nodiscard]] std::string inspection_service_name(std::string_view method);

using ShellPredicate = std::function<bool(const InstanceId&)>;

/// MissingHeaderId, DuplicateBodyEntry and UnknownSemanticTag are errors;
/// DanglingChild (only checked when is_registered is given) is a warning.
[[nodiscard]] Report validate_manifest(const Manifest& manifest,
                                       const Dictionary& dict = Dictionary::standard(),
                                       const ShellPredicate& is_registered = {});

/// The .aas encoding (JSON). Throws Error(ParseError) with a byte offset.
[[nodiscard]] Manifest manifest_from_json(std::string_view text);
[[nodiscard]] std::string manifest_to_json(const Manifest& manifest);

struct ShellHandle {
  InstanceId id;
  std::size_t registration_index = 0;
  /// Warnings and informational findings from registration.
  Report report;
};

/// Registry of digital twins. Mutations are serialized; reads run
/// concurrently and always see a complete manifest.
class TwinRegistry {
 public:
  explicit TwinRegistry(const Dictionary& dict = Dictionary::standard()) : dict_(&dict) {}

  /// Throws ValidationError(InvalidManifest), Error(DuplicateInstance | CycleDetected).
  ShellHandle register_shell(Manifest manifest);
  /// Throws Error(UnknownShell | CycleDetected). Re-nesting an existing edge is a no-op.
  void nest(const InstanceId& parent, const InstanceId& child);
  /// Throws Error(UnknownShell).
  [[nodiscard]] Manifest resolve(const InstanceId& id) const;

  [[nodiscard]] Report validate(const Manifest& manifest) const;
  [[nodiscard]] bool contains(const InstanceId& id) const;
  /// Registration order.
  [[nodiscard]] std::vector<InstanceId> list() const;
  [[nodiscard]] std::size_t size() const;

 private:
  [[nodiscard]] bool reaches(const std::string& from, const std::string& target) const;

  const Dictionary* dict_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Manifest> shells_;
  std::vector<InstanceId> order_;
};

}  // namespace nde4
