/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nde4/archive.hpp"
#include "nde4/data_object.hpp"
#include "nde4/inspection.hpp"
#include "nde4/orders.hpp"

namespace nde4 {

/// Order fields that must have a tag in every mapping table.
inline constexpr std::string_view kMustMapFields[] = {"order_id", "component_serial", "procedure_id",
                                                      "component_type"};
/// Every field of an InspectionOrder, in declaration order.
inline constexpr std::string_view kOrderFields[] = {"order_id", "component_serial", "component_type",
                                                    "procedure_id", "station", "due", "priority"};

/// Bijection between orders-bus field names and archive tags.
class MappingTable {
 public:
  using Entry = std::pair<std::string, TagCode>;

  /// Throws Error(InvalidMapping) unless the pairs form a bijection over
  /// known order fields and non-reserved tags.
  MappingTable(int version, std::vector<Entry> entries);

  [[nodiscard]] int version() const noexcept { return version_; }
  [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::optional<TagCode> tag_for(std::string_view field) const noexcept;
  [[nodiscard]] std::optional<std::string> field_for(TagCode tag) const;
  [[nodiscard]] MappingTable without(std::string_view field) const;

  /// Compiled-in copy of mapping-v1.tsv.
  [[nodiscard]] static const MappingTable& standard();
  /// Throws Error(ParseError | InvalidMapping).
  [[nodiscard]] static MappingTable from_tsv(std::string_view text);
  [[nodiscard]] std::string to_tsv() const;

 private:
  int version_;
  std::vector<Entry> entries_;
};

/// Text form of every order field; absent optional fields are omitted.
[[nodiscard]] std::map<std::string, std::string> order_fields(const InspectionOrder& order);

/// Metadata seed for every object stored for the order: mapped fields copied
/// verbatim under their tags, the rest as a JSON blob under (0009,0001).
/// Throws Error(UnmappedField).
[[nodiscard]] std::vector<Element> order_to_archive_work(const MappingTable& table,
                                                         const InspectionOrder& order);
/// Inverse of order_to_archive_work.
[[nodiscard]] std::map<std::string, std::string> extract_order_fields(const MappingTable& table,
                                                                      std::span<const Element> seed);

/// KPIs for an evaluated order. Every uid must be fetchable and belong to
/// order_id. Throws Error(DanglingArchiveRef | ValidationFailed).
[[nodiscard]] ReportedValues archive_result_to_kpis(const std::string& order_id,
                                                    std::span<const Indication> findings,
                                                    std::vector<std::string> uids, const VerdictRule& rule,
                                                    const ArchiveProbe& probe);

enum class PayloadKind { Workflow, Bulk };
enum class Route { Orders, Archive, ArchiveWithReference };

[[nodiscard]] std::string_view to_string(Route r) noexcept;
/// Bulk always goes to the archive; workflow messages above 16 MiB are
/// archived and referenced from the ORDERS channel.
[[nodiscard]] Route route(std::uint64_t payload_size, PayloadKind kind) noexcept;

}  // namespace nde4
