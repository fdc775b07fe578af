/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nde4/bytes.hpp"
#include "nde4/datetime.hpp"
#include "nde4/error.hpp"
#include "nde4/identity.hpp"

namespace nde4 {

struct InspectionOrder {
  std::string order_id;
  std::string component_serial;
  TypeId component_type;
  std::string procedure_id;
  std::optional<InstanceId> station;
  DateTime due;
  unsigned priority = 0;

  friend bool operator==(const InspectionOrder&, const InspectionOrder&) = default;
};

/// Throws Error(ValidationFailed).
void validate_order(const InspectionOrder& order);

/// Declaration order is the lifecycle order.
enum class OrderState { Queued, Assigned, InProgress, DataArchived, Reported, Rejected };

[[nodiscard]] std::string_view to_string(OrderState s) noexcept;
[[nodiscard]] std::optional<OrderState> order_state_from_string(std::string_view s) noexcept;
[[nodiscard]] bool is_terminal(OrderState s) noexcept;
/// Forward along QUEUED..REPORTED, or to REJECTED from a non-terminal state.
[[nodiscard]] bool is_legal_transition(OrderState from, OrderState to) noexcept;

struct StatusEvent {
  std::string order_id;
  OrderState state = OrderState::Queued;
  DateTime at;
  /// Assigned by the broker; dense per broker from 0.
  std::uint64_t seq = 0;

  friend bool operator==(const StatusEvent&, const StatusEvent&) = default;
};

enum class Verdict { Accept, Reject, Rework };

[[nodiscard]] std::string_view to_string(Verdict v) noexcept;
[[nodiscard]] std::optional<Verdict> verdict_from_string(std::string_view s) noexcept;

/// Key performance indicators of one inspection.
struct ReportedValues {
  std::string order_id;
  Verdict verdict = Verdict::Accept;
  std::uint32_t indication_count = 0;
  std::optional<float> max_amplitude;
  std::vector<std::string> archived_refs;

  friend bool operator==(const ReportedValues&, const ReportedValues&) = default;
};

/// Throws Error(ValidationFailed).
void validate_reported_values(const ReportedValues& rv);

struct Ack {
  std::string ref;
  std::string detail;
  friend bool operator==(const Ack&, const Ack&) = default;
};

struct ErrorMessage {
  Errc code = Errc::IoError;
  std::string message;
  friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

/// Points at a workflow payload that was too large for the ORDERS channel
/// and was archived instead.
struct ReferenceMessage {
  std::string order_id;
  std::string uid;
  std::uint64_t size = 0;
  friend bool operator==(const ReferenceMessage&, const ReferenceMessage&) = default;
};

struct PollRequest {
  InstanceId station;
  friend bool operator==(const PollRequest&, const PollRequest&) = default;
};

struct Worklist {
  std::vector<InspectionOrder> orders;
  friend bool operator==(const Worklist&, const Worklist&) = default;
};

using OrdersMessage = std::variant<InspectionOrder, StatusEvent, ReportedValues, Ack, ErrorMessage,
                                   ReferenceMessage, PollRequest, Worklist>;

/// UTF-8 JSON with a "kind" discriminator; see docs/FORMATS.md.
[[nodiscard]] Bytes encode_message(const OrdersMessage& msg);
/// Throws Error(ParseError) with a byte offset for malformed JSON.
[[nodiscard]] OrdersMessage decode_message(ByteView payload);

}  // namespace nde4
