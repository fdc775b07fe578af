/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/orders.hpp"

#include <array>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nde4/data_object.hpp"

namespace nde4 {

namespace {

constexpr std::array<std::string_view, 6> kStateNames = {"QUEUED",        "ASSIGNED", "IN_PROGRESS",
                                                         "DATA_ARCHIVED", "REPORTED", "REJECTED"};
constexpr std::array<std::string_view, 3> kVerdictNames = {"ACCEPT", "REJECT", "REWORK"};

}  // namespace

std::string_view to_string(OrderState s) noexcept { return kStateNames[static_cast<std::size_t>(s)]; }

std::optional<OrderState> order_state_from_string(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kStateNames.size(); ++i) {
    if (kStateNames[i] == s) return static_cast<OrderState>(i);
  }
  return std::nullopt;
}

bool is_terminal(OrderState s) noexcept { return s == OrderState::Reported || s == OrderState::Rejected; }

bool is_legal_transition(OrderState from, OrderState to) noexcept {
  if (is_terminal(from)) return false;
  if (to == OrderState::Rejected) return true;
  return to > from;
}

std::string_view to_string(Verdict v) noexcept { return kVerdictNames[static_cast<std::size_t>(v)]; }

std::optional<Verdict> verdict_from_string(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kVerdictNames.size(); ++i) {
    if (kVerdictNames[i] == s) return static_cast<Verdict>(i);
  }
  return std::nullopt;
}

void validate_order(const InspectionOrder& o) {
  auto fail = [&](std::string_view why) {
    throw Error(Errc::ValidationFailed, fmt::format("order '{}': {}", o.order_id, why));
  };
  if (!is_serial_token(o.order_id)) fail("order_id is not a token");
  if (!is_serial_token(o.component_serial)) fail("component_serial is not a token");
  if (!is_serial_token(o.procedure_id)) fail("procedure_id is not a token");
  if (o.component_type.canonical().empty()) fail("component_type is unset");
  if (!DateTime::try_parse(o.due.str())) fail("due is not a valid DATETIME");
}

void validate_reported_values(const ReportedValues& rv) {
  auto fail = [&](std::string_view why) {
    throw Error(Errc::ValidationFailed, fmt::format("report for '{}': {}", rv.order_id, why));
  };
  if (!is_serial_token(rv.order_id)) fail("order_id is not a token");
  if (rv.verdict == Verdict::Reject && rv.indication_count == 0) fail("REJECT without indications");
  for (const auto& uid : rv.archived_refs) {
    if (!is_object_uid(uid)) fail(fmt::format("'{}' is not an object UID", uid));
  }
}

// --- JSON codec -------------------------------------------------------------

namespace {

using nlohmann::json;

json order_json(const InspectionOrder& o) {
  json j = {{"order_id", o.order_id},
            {"component_serial", o.component_serial},
            {"component_type", o.component_type.canonical()},
            {"procedure_id", o.procedure_id},
            {"due", o.due.str()},
            {"priority", o.priority}};
  if (o.station) j["station"] = o.station->canonical();
  return j;
}

// Structural problems inside a syntactically valid document have no better
// location than the document start.
[[noreturn]] void bad_field(std::string_view field, std::string_view why) {
  throw Error(Errc::ParseError, fmt::format("field '{}': {}", field, why), 0);
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad_field(key, "missing");
  return j.at(key);
}

std::string str_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) bad_field(key, "expected a string");
  return v.get<std::string>();
}

std::uint64_t uint_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_unsigned()) bad_field(key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

DateTime time_field(const json& j, const char* key) {
  auto dt = DateTime::try_parse(str_field(j, key));
  if (!dt) bad_field(key, "expected YYYYMMDDThhmmss");
  return *dt;
}

template <typename T, typename F>
T id_field(const json& j, const char* key, F parse) {
  try {
    return parse(str_field(j, key));
  } catch (const Error& e) {
    if (e.code() != Errc::ParseError) throw;
    bad_field(key, e.detail());
  }
}

InspectionOrder order_from(const json& j) {
  InspectionOrder o;
  o.order_id = str_field(j, "order_id");
  o.component_serial = str_field(j, "component_serial");
  o.component_type = id_field<TypeId>(j, "component_type", [](const std::string& s) { return parse_type_id(s); });
  o.procedure_id = str_field(j, "procedure_id");
  if (j.contains("station") && !j["station"].is_null()) {
    o.station = id_field<InstanceId>(j, "station", [](const std::string& s) { return parse_instance_id(s); });
  }
  o.due = time_field(j, "due");
  if (j.contains("priority")) {
    auto p = uint_field(j, "priority");
    if (p > 0xFFFF'FFFFU) bad_field("priority", "out of range");
    o.priority = static_cast<unsigned>(p);
  }
  return o;
}

struct Encoder {
  json operator()(const InspectionOrder& o) const {
    json j = order_json(o);
    j["kind"] = "order";
    return j;
  }
  json operator()(const StatusEvent& e) const {
    return {{"kind", "status"}, {"order_id", e.order_id}, {"state", to_string(e.state)}, {"at", e.at.str()},
            {"seq", e.seq}};
  }
  json operator()(const ReportedValues& rv) const {
    json j = {{"kind", "report"},
              {"order_id", rv.order_id},
              {"verdict", to_string(rv.verdict)},
              {"indication_count", rv.indication_count},
              {"archived_refs", rv.archived_refs}};
    if (rv.max_amplitude) j["max_amplitude"] = static_cast<double>(*rv.max_amplitude);
    return j;
  }
  json operator()(const Ack& a) const { return {{"kind", "ack"}, {"ref", a.ref}, {"detail", a.detail}}; }
  json operator()(const ErrorMessage& e) const {
    return {{"kind", "error"}, {"error", to_string(e.code)}, {"message", e.message}};
  }
  json operator()(const ReferenceMessage& r) const {
    return {{"kind", "ref"}, {"order_id", r.order_id}, {"uid", r.uid}, {"size", r.size}};
  }
  json operator()(const PollRequest& p) const { return {{"kind", "poll"}, {"station", p.station.canonical()}}; }
  json operator()(const Worklist& w) const {
    json orders = json::array();
    for (const auto& o : w.orders) orders.push_back(order_json(o));
    return {{"kind", "worklist"}, {"orders", orders}};
  }
};

}  // namespace

Bytes encode_message(const OrdersMessage& msg) { return to_bytes(std::visit(Encoder{}, msg).dump()); }

OrdersMessage decode_message(ByteView payload) {
  json j;
  try {
    j = json::parse(payload.begin(), payload.end());
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, "malformed JSON", e.byte > 0 ? e.byte - 1 : 0);
  }
  if (!j.is_object()) throw Error(Errc::ParseError, "message is not a JSON object", 0);
  const std::string kind = str_field(j, "kind");

  if (kind == "order") return order_from(j);
  if (kind == "status") {
    auto state = order_state_from_string(str_field(j, "state"));
    if (!state) bad_field("state", "unknown state");
    StatusEvent e{str_field(j, "order_id"), *state, time_field(j, "at"), 0};
    if (j.contains("seq")) e.seq = uint_field(j, "seq");
    return e;
  }
  if (kind == "report") {
    ReportedValues rv;
    rv.order_id = str_field(j, "order_id");
    auto v = verdict_from_string(str_field(j, "verdict"));
    if (!v) bad_field("verdict", "unknown verdict");
    rv.verdict = *v;
    auto n = uint_field(j, "indication_count");
    if (n > 0xFFFF'FFFFU) bad_field("indication_count", "out of range");
    rv.indication_count = static_cast<std::uint32_t>(n);
    if (j.contains("max_amplitude") && !j["max_amplitude"].is_null()) {
      if (!j["max_amplitude"].is_number()) bad_field("max_amplitude", "expected a number");
      rv.max_amplitude = static_cast<float>(j["max_amplitude"].get<double>());
    }
    const json& refs = field(j, "archived_refs");
    if (!refs.is_array()) bad_field("archived_refs", "expected an array");
    for (const auto& r : refs) {
      if (!r.is_string()) bad_field("archived_refs", "expected strings");
      rv.archived_refs.push_back(r.get<std::string>());
    }
    return rv;
  }
  if (kind == "ack") return Ack{str_field(j, "ref"), j.value("detail", std::string{})};
  if (kind == "error") {
    auto code = errc_from_string(str_field(j, "error"));
    if (!code) bad_field("error", "unknown error code");
    return ErrorMessage{*code, j.value("message", std::string{})};
  }
  if (kind == "ref") return ReferenceMessage{str_field(j, "order_id"), str_field(j, "uid"), uint_field(j, "size")};
  if (kind == "poll") {
    return PollRequest{id_field<InstanceId>(j, "station", [](const std::string& s) { return parse_instance_id(s); })};
  }
  if (kind == "worklist") {
    Worklist w;
    const json& orders = field(j, "orders");
    if (!orders.is_array()) bad_field("orders", "expected an array");
    for (const auto& o : orders) w.orders.push_back(order_from(o));
    return w;
  }
  bad_field("kind", fmt::format("unknown message kind '{}'", kind));
}

}  // namespace nde4
