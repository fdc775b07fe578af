/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/orders_bus.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "nde4/error.hpp"

namespace nde4 {

struct Subscription::State {
  std::string topic;
  std::mutex mutex;
  std::deque<StatusEvent> queue;
  bool active = true;
};

Subscription& Subscription::operator=(Subscription&& other) noexcept {
  if (this != &other) {
    unsubscribe();
    state_ = std::move(other.state_);
  }
  return *this;
}

Subscription::~Subscription() { unsubscribe(); }

std::optional<StatusEvent> Subscription::next() {
  if (!state_) return std::nullopt;
  std::lock_guard lock(state_->mutex);
  if (state_->queue.empty()) return std::nullopt;
  StatusEvent e = std::move(state_->queue.front());
  state_->queue.pop_front();
  return e;
}

std::vector<StatusEvent> Subscription::drain() {
  std::vector<StatusEvent> out;
  while (auto e = next()) out.push_back(std::move(*e));
  return out;
}

bool Subscription::active() const noexcept {
  if (!state_) return false;
  std::lock_guard lock(state_->mutex);
  return state_->active;
}

// Pending events stay readable until the handle itself goes away; only
// future publications stop.
void Subscription::unsubscribe() {
  if (!state_) return;
  std::lock_guard lock(state_->mutex);
  state_->active = false;
}

OrdersBus::OrdersBus(const TwinRegistry& registry, const ProcedureCatalog& procedures, ArchiveProbe probe,
                     const LogicalClock* clock)
    : registry_(&registry), procedures_(&procedures), probe_(std::move(probe)), clock_(clock) {}

Acknowledgment OrdersBus::publish_locked(const std::string& order_id, OrderState state, DateTime at) {
  orders_.at(order_id).state = state;
  StatusEvent e{order_id, state, at, next_seq_++};
  std::erase_if(subscribers_, [](const auto& w) { return w.expired(); });
  for (const auto& w : subscribers_) {
    auto s = w.lock();
    std::lock_guard lock(s->mutex);
    if (s->active && (s->topic == kWildcardTopic || s->topic == order_id)) s->queue.push_back(e);
  }
  return {order_id, state, e.seq};
}

DateTime OrdersBus::stamp(std::optional<DateTime> given) const {
  if (clock_ != nullptr) return clock_->now();
  return given.value_or(LogicalClock::epoch());
}

Acknowledgment OrdersBus::submit_order(const InspectionOrder& order) {
  validate_order(order);
  if (procedures_->find(order.procedure_id) == nullptr) {
    throw Error(Errc::ValidationFailed, fmt::format("order '{}': unknown procedure '{}'", order.order_id,
                                                    order.procedure_id));
  }
  std::lock_guard lock(mutex_);
  if (orders_.count(order.order_id) != 0) {
    throw Error(Errc::DuplicateOrder, fmt::format("order '{}' already submitted", order.order_id));
  }
  orders_.emplace(order.order_id, Record{order, OrderState::Queued, {}, {}, {}});
  submission_order_.push_back(order.order_id);
  return publish_locked(order.order_id, OrderState::Queued, stamp(std::nullopt));
}

bool OrdersBus::station_matches(const InspectionOrder& order, const InstanceId& station,
                                const Manifest& shell) const {
  if (order.station) return *order.station == station;
  const Procedure* p = procedures_->find(order.procedure_id);
  return p != nullptr && shell.advertises(p->method);
}

std::vector<InspectionOrder> OrdersBus::poll_worklist(const InstanceId& station) const {
  if (!registry_->contains(station)) {
    throw Error(Errc::UnknownStation, fmt::format("{} is not a registered station", station.canonical()));
  }
  const Manifest shell = registry_->resolve(station);
  std::vector<InspectionOrder> out;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, rec] : orders_) {
      if (rec.state == OrderState::Queued && station_matches(rec.order, station, shell)) out.push_back(rec.order);
    }
  }
  std::sort(out.begin(), out.end(), worklist_before);
  return out;
}

bool worklist_before(const InspectionOrder& a, const InspectionOrder& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.due != b.due) return a.due < b.due;
  return a.order_id < b.order_id;
}

Acknowledgment OrdersBus::assign(const std::string& order_id, const InstanceId& station) {
  if (!registry_->contains(station)) {
    throw Error(Errc::UnknownStation, fmt::format("{} is not a registered station", station.canonical()));
  }
  const Manifest shell = registry_->resolve(station);
  std::lock_guard lock(mutex_);
  auto it = orders_.find(order_id);
  if (it == orders_.end()) throw Error(Errc::UnknownOrder, fmt::format("no order '{}'", order_id));
  if (it->second.state != OrderState::Queued) {
    throw Error(Errc::IllegalTransition,
                fmt::format("order '{}' is {}, not QUEUED", order_id, to_string(it->second.state)));
  }
  if (!station_matches(it->second.order, station, shell)) {
    throw Error(Errc::ValidationFailed,
                fmt::format("{} cannot perform order '{}'", station.canonical(), order_id));
  }
  it->second.assigned_station = station;
  return publish_locked(order_id, OrderState::Assigned, stamp(std::nullopt));
}

Acknowledgment OrdersBus::publish_status(const StatusEvent& event) {
  std::lock_guard lock(mutex_);
  auto it = orders_.find(event.order_id);
  if (it == orders_.end()) throw Error(Errc::UnknownOrder, fmt::format("no order '{}'", event.order_id));
  const OrderState from = it->second.state;
  // REPORTED carries KPIs, so it is only reachable through report_values.
  if (!is_legal_transition(from, event.state) || event.state == OrderState::Reported) {
    throw Error(Errc::IllegalTransition, fmt::format("order '{}': {} -> {}", event.order_id, to_string(from),
                                                     to_string(event.state)));
  }
  return publish_locked(event.order_id, event.state, stamp(event.at));
}

Subscription OrdersBus::subscribe(std::string topic) {
  auto state = std::make_shared<Subscription::State>();
  state->topic = std::move(topic);
  std::lock_guard lock(mutex_);
  subscribers_.push_back(state);
  Subscription s;
  s.state_ = std::move(state);
  return s;
}

Acknowledgment OrdersBus::report_values(const ReportedValues& rv) {
  std::lock_guard lock(mutex_);
  auto it = orders_.find(rv.order_id);
  if (it == orders_.end()) throw Error(Errc::UnknownOrder, fmt::format("no order '{}'", rv.order_id));
  Record& rec = it->second;
  if (rec.state != OrderState::DataArchived) {
    throw Error(Errc::WrongState,
                fmt::format("order '{}' is {}, KPIs need DATA_ARCHIVED", rv.order_id, to_string(rec.state)));
  }
  validate_reported_values(rv);
  const Procedure* p = procedures_->find(rec.order.procedure_id);
  const std::size_t min_refs = p != nullptr ? p->min_refs : 1;
  if (rv.archived_refs.size() < min_refs) {
    throw Error(Errc::ValidationFailed, fmt::format("order '{}': {} archived refs, procedure '{}' needs {}",
                                                    rv.order_id, rv.archived_refs.size(),
                                                    rec.order.procedure_id, min_refs));
  }
  for (const auto& uid : rv.archived_refs) {
    auto owner = probe_ ? probe_(uid) : std::nullopt;
    if (!owner) throw Error(Errc::DanglingArchiveRef, fmt::format("object '{}' is not fetchable", uid));
    if (*owner != rv.order_id) {
      throw Error(Errc::DanglingArchiveRef,
                  fmt::format("object '{}' belongs to order '{}', not '{}'", uid, *owner, rv.order_id));
    }
  }
  rec.kpis = rv;
  return publish_locked(rv.order_id, OrderState::Reported, stamp(std::nullopt));
}

void OrdersBus::attach_reference(const ReferenceMessage& ref) {
  std::lock_guard lock(mutex_);
  auto it = orders_.find(ref.order_id);
  if (it == orders_.end()) throw Error(Errc::UnknownOrder, fmt::format("no order '{}'", ref.order_id));
  it->second.references.push_back(ref.uid);
}

std::optional<OrdersBus::Record> OrdersBus::record(const std::string& order_id) const {
  std::lock_guard lock(mutex_);
  auto it = orders_.find(order_id);
  if (it == orders_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> OrdersBus::order_ids() const {
  std::lock_guard lock(mutex_);
  return submission_order_;
}

// --- ORDERS channel -------------------------------------------------------------

namespace {

Frame reply(const OrdersMessage& msg) { return {Channel::Orders, encode_message(msg)}; }

Ack ack_of(const Acknowledgment& a) {
  return {a.order_id, fmt::format("{} seq {}", to_string(a.state), a.seq)};
}

}  // namespace

Frame handle_orders_frame(OrdersBus& bus, const Frame& request) {
  try {
    if (request.channel != Channel::Orders) throw Error(Errc::BadChannel, "expected an ORDERS frame");
    OrdersMessage msg = decode_message(request.payload);
    if (auto* o = std::get_if<InspectionOrder>(&msg)) return reply(ack_of(bus.submit_order(*o)));
    if (auto* e = std::get_if<StatusEvent>(&msg)) return reply(ack_of(bus.publish_status(*e)));
    if (auto* rv = std::get_if<ReportedValues>(&msg)) return reply(ack_of(bus.report_values(*rv)));
    if (auto* p = std::get_if<PollRequest>(&msg)) return reply(Worklist{bus.poll_worklist(p->station)});
    if (auto* r = std::get_if<ReferenceMessage>(&msg)) {
      bus.attach_reference(*r);
      return reply(Ack{r->order_id, fmt::format("reference {}", r->uid)});
    }
    throw Error(Errc::ParseError, "message kind is not a request", 0);
  } catch (const Error& e) {
    return reply(ErrorMessage{e.code(), e.detail()});
  }
}

OrdersMessage OrdersClient::call(const OrdersMessage& msg) {
  Frame response = link_(Frame{Channel::Orders, encode_message(msg)});
  if (response.channel != Channel::Orders) throw Error(Errc::BadChannel, "malformed ORDERS response");
  OrdersMessage out = decode_message(response.payload);
  if (auto* e = std::get_if<ErrorMessage>(&out)) throw Error(e->code, e->message);
  return out;
}

namespace {

Ack expect_ack(OrdersMessage m) {
  if (auto* a = std::get_if<Ack>(&m)) return *a;
  throw Error(Errc::ParseError, "expected an ack", 0);
}

}  // namespace

Ack OrdersClient::submit(const InspectionOrder& order) { return expect_ack(call(order)); }
Ack OrdersClient::publish(const StatusEvent& event) { return expect_ack(call(event)); }
Ack OrdersClient::report(const ReportedValues& rv) { return expect_ack(call(rv)); }
Ack OrdersClient::reference(const ReferenceMessage& ref) { return expect_ack(call(ref)); }

std::vector<InspectionOrder> OrdersClient::poll(const InstanceId& station) {
  OrdersMessage m = call(PollRequest{station});
  if (auto* w = std::get_if<Worklist>(&m)) return std::move(w->orders);
  throw Error(Errc::ParseError, "expected a worklist", 0);
}

}  // namespace nde4
