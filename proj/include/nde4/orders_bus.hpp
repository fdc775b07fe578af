/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "nde4/archive.hpp"
#include "nde4/frame.hpp"
#include "nde4/inspection.hpp"
#include "nde4/orders.hpp"
#include "nde4/registry.hpp"

namespace nde4 {

inline constexpr std::string_view kWildcardTopic = "*";

struct Acknowledgment {
  std::string order_id;
  OrderState state = OrderState::Queued;
  std::uint64_t seq = 0;
};

class OrdersBus;

/// Per-subscriber FIFO of status events. Unsubscribes on destruction.
class Subscription {
 public:
  Subscription() = default;
  Subscription(Subscription&&) noexcept = default;
  Subscription& operator=(Subscription&&) noexcept;
  ~Subscription();

  [[nodiscard]] std::optional<StatusEvent> next();
  [[nodiscard]] std::vector<StatusEvent> drain();
  void unsubscribe();
  /// False once unsubscribed; pending events stay readable.
  [[nodiscard]] bool active() const noexcept;

 private:
  friend class OrdersBus;
  struct State;
  std::shared_ptr<State> state_;
};

/// Manufacturing-execution side of the workflow channel: order book,
/// worklists, status pub-sub and KPI storage.
///
/// One logical broker: every call is serialized, so publications are totally
/// ordered and state transitions per order are atomic.
class OrdersBus {
 public:
  struct Record {
    InspectionOrder order;
    OrderState state = OrderState::Queued;
    std::optional<InstanceId> assigned_station;
    std::optional<ReportedValues> kpis;
    std::vector<std::string> references;
  };

  OrdersBus(const TwinRegistry& registry, const ProcedureCatalog& procedures, ArchiveProbe probe,
            const LogicalClock* clock = nullptr);

  /// Throws Error(DuplicateOrder | ValidationFailed).
  Acknowledgment submit_order(const InspectionOrder& order);
  /// QUEUED orders this station may take: priority desc, due asc, order_id asc.
  /// Throws Error(UnknownStation).
  [[nodiscard]] std::vector<InspectionOrder> poll_worklist(const InstanceId& station) const;
  /// Throws Error(UnknownOrder | IllegalTransition).
  Acknowledgment publish_status(const StatusEvent& event);
  /// Claims a worklist entry for a station and publishes ASSIGNED.
  Acknowledgment assign(const std::string& order_id, const InstanceId& station);
  [[nodiscard]] Subscription subscribe(std::string topic);
  /// Throws Error(UnknownOrder | WrongState | DanglingArchiveRef | ValidationFailed).
  Acknowledgment report_values(const ReportedValues& rv);
  /// Records an archived oversize workflow payload. Throws Error(UnknownOrder).
  void attach_reference(const ReferenceMessage& ref);

  [[nodiscard]] std::optional<Record> record(const std::string& order_id) const;
  /// Submission order.
  [[nodiscard]] std::vector<std::string> order_ids() const;

 private:
  [[nodiscard]] bool station_matches(const InspectionOrder& order, const InstanceId& station,
                                     const Manifest& shell) const;
  Acknowledgment publish_locked(const std::string& order_id, OrderState state, DateTime at);
  [[nodiscard]] DateTime stamp(std::optional<DateTime> given) const;

  const TwinRegistry* registry_;
  const ProcedureCatalog* procedures_;
  ArchiveProbe probe_;
  const LogicalClock* clock_;

  mutable std::mutex mutex_;
  std::map<std::string, Record, std::less<>> orders_;
  std::vector<std::string> submission_order_;
  std::vector<std::weak_ptr<Subscription::State>> subscribers_;
  std::uint64_t next_seq_ = 0;
};

/// Worklist order: priority desc, due asc, order_id asc.
[[nodiscard]] bool worklist_before(const InspectionOrder& a, const InspectionOrder& b);

/// Server side of the ORDERS channel.
[[nodiscard]] Frame handle_orders_frame(OrdersBus& bus, const Frame& request);

/// Client side of the ORDERS channel; ERROR replies are rethrown as Error.
class OrdersClient {
 public:
  explicit OrdersClient(FrameLink link) : link_(std::move(link)) {}

  Ack submit(const InspectionOrder& order);
  [[nodiscard]] std::vector<InspectionOrder> poll(const InstanceId& station);
  Ack publish(const StatusEvent& event);
  Ack report(const ReportedValues& rv);
  Ack reference(const ReferenceMessage& ref);

 private:
  OrdersMessage call(const OrdersMessage& msg);
  FrameLink link_;
};

}  // namespace nde4
