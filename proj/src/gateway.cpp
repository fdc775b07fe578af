/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/gateway.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nde4/error.hpp"
#include "nde4/frame.hpp"

namespace nde4 {

MappingTable::MappingTable(int version, std::vector<Entry> entries) : version_(version), entries_(std::move(entries)) {
  if (version_ < 1) throw Error(Errc::InvalidMapping, "mapping version must be >= 1");
  std::set<std::string> fields;
  std::set<TagCode> codes;
  for (const auto& [field, tag] : entries_) {
    if (std::find(std::begin(kOrderFields), std::end(kOrderFields), field) == std::end(kOrderFields)) {
      throw Error(Errc::InvalidMapping, fmt::format("'{}' is not an order field", field));
    }
    if (tag.is_private() || tag == tags::kObjectUid) {
      throw Error(Errc::InvalidMapping, fmt::format("tag {} is reserved", tag.str()));
    }
    if (!fields.insert(field).second) {
      throw Error(Errc::InvalidMapping, fmt::format("field '{}' mapped twice", field));
    }
    if (!codes.insert(tag).second) throw Error(Errc::InvalidMapping, fmt::format("tag {} mapped twice", tag.str()));
  }
}

std::optional<TagCode> MappingTable::tag_for(std::string_view field) const noexcept {
  for (const auto& [f, t] : entries_) {
    if (f == field) return t;
  }
  return std::nullopt;
}

std::optional<std::string> MappingTable::field_for(TagCode tag) const {
  for (const auto& [f, t] : entries_) {
    if (t == tag) return f;
  }
  return std::nullopt;
}

MappingTable MappingTable::without(std::string_view field) const {
  std::vector<Entry> kept;
  for (const auto& e : entries_) {
    if (e.first != field) kept.push_back(e);
  }
  return MappingTable(version_, std::move(kept));
}

const MappingTable& MappingTable::standard() {
  static const MappingTable table(1, {
                                         {"order_id", tags::kOrderId},
                                         {"component_serial", tags::kComponentSerial},
                                         {"procedure_id", tags::kProcedureId},
                                         {"component_type", tags::kComponentType},
                                     });
  return table;
}

namespace {

std::optional<std::uint16_t> hex16(std::string_view s) {
  if (s.size() != 4) return std::nullopt;
  std::uint16_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) return out;
    start = tab + 1;
  }
}

}  // namespace

MappingTable MappingTable::from_tsv(std::string_view text) {
  int version = 0;
  std::vector<Entry> entries;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const std::size_t line_at = pos;
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (line.front() == '#') {
      if (cols.size() == 2 && cols[0] == "#version") {
        auto [p, ec] = std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), version);
        if (ec != std::errc{} || p != cols[1].data() + cols[1].size()) {
          throw Error(Errc::ParseError, "bad version line", line_at);
        }
      }
      continue;
    }
    if (cols.size() != 3) throw Error(Errc::ParseError, "expected field<TAB>group<TAB>element", line_at);
    auto g = hex16(cols[1]);
    auto e = hex16(cols[2]);
    if (!g || !e) throw Error(Errc::ParseError, fmt::format("bad tag in line '{}'", line), line_at);
    entries.emplace_back(std::string(cols[0]), TagCode{*g, *e});
  }
  if (version == 0) throw Error(Errc::ParseError, "missing #version line", 0);
  return MappingTable(version, std::move(entries));
}

std::string MappingTable::to_tsv() const {
  std::string out = fmt::format("#version\t{}\n#field\tgroup\telement\n", version_);
  for (const auto& [f, t] : entries_) out += fmt::format("{}\t{:04X}\t{:04X}\n", f, t.group, t.element);
  return out;
}

std::map<std::string, std::string> order_fields(const InspectionOrder& o) {
  std::map<std::string, std::string> out{
      {"order_id", o.order_id},
      {"component_serial", o.component_serial},
      {"component_type", o.component_type.canonical()},
      {"procedure_id", o.procedure_id},
      {"due", o.due.str()},
      {"priority", std::to_string(o.priority)},
  };
  if (o.station) out["station"] = o.station->canonical();
  return out;
}

std::vector<Element> order_to_archive_work(const MappingTable& table, const InspectionOrder& order) {
  validate_order(order);
  for (auto field : kMustMapFields) {
    if (!table.tag_for(field)) {
      throw Error(Errc::UnmappedField, fmt::format("mapping v{} has no tag for '{}'", table.version(), field));
    }
  }
  std::vector<Element> seed;
  nlohmann::json extras = nlohmann::json::object();
  for (const auto& [field, value] : order_fields(order)) {
    if (auto tag = table.tag_for(field)) {
      seed.push_back({*tag, to_bytes(value)});
    } else {
      extras[field] = value;
    }
  }
  if (!extras.empty()) seed.push_back({tags::kOrderExtras, to_bytes(extras.dump())});
  std::sort(seed.begin(), seed.end(), [](const Element& a, const Element& b) { return a.tag < b.tag; });
  return seed;
}

std::map<std::string, std::string> extract_order_fields(const MappingTable& table, std::span<const Element> seed) {
  std::map<std::string, std::string> out;
  for (const auto& el : seed) {
    if (el.tag == tags::kOrderExtras) {
      auto j = nlohmann::json::parse(el.value.begin(), el.value.end(), nullptr, false);
      if (!j.is_object()) throw Error(Errc::ParseError, "order extras blob is not a JSON object", 0);
      for (const auto& [k, v] : j.items()) {
        if (v.is_string()) out[k] = v.get<std::string>();
      }
    } else if (auto field = table.field_for(el.tag)) {
      out[*field] = to_string(el.value);
    }
  }
  return out;
}

ReportedValues archive_result_to_kpis(const std::string& order_id, std::span<const Indication> findings,
                                      std::vector<std::string> uids, const VerdictRule& rule,
                                      const ArchiveProbe& probe) {
  if (uids.empty()) throw Error(Errc::ValidationFailed, fmt::format("order '{}': no archived objects", order_id));
  for (const auto& uid : uids) {
    auto owner = probe ? probe(uid) : std::nullopt;
    if (!owner) throw Error(Errc::DanglingArchiveRef, fmt::format("object '{}' is not fetchable", uid));
    if (*owner != order_id) {
      throw Error(Errc::DanglingArchiveRef,
                  fmt::format("object '{}' belongs to order '{}', not '{}'", uid, *owner, order_id));
    }
  }
  ReportedValues rv;
  rv.order_id = order_id;
  rv.indication_count = static_cast<std::uint32_t>(findings.size());
  for (const auto& f : findings) {
    if (!rv.max_amplitude || f.amplitude > *rv.max_amplitude) rv.max_amplitude = f.amplitude;
  }
  rv.verdict = rule.apply(rv.max_amplitude);
  rv.archived_refs = std::move(uids);
  return rv;
}

std::string_view to_string(Route r) noexcept {
  switch (r) {
    case Route::Orders:
      return "ORDERS";
    case Route::Archive:
      return "ARCHIVE";
    case Route::ArchiveWithReference:
      return "ARCHIVE_WITH_REFERENCE";
  }
  return "?";
}

Route route(std::uint64_t payload_size, PayloadKind kind) noexcept {
  if (kind == PayloadKind::Bulk) return Route::Archive;
  return payload_size <= kMaxOrdersPayload ? Route::Orders : Route::ArchiveWithReference;
}

}  // namespace nde4
