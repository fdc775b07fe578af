/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nde4/archive.hpp"
#include "nde4/data_object.hpp"
#include "nde4/datetime.hpp"
#include "nde4/frame.hpp"
#include "nde4/identity.hpp"

namespace nde4 {

struct UsagePolicy {
  /// nullopt = unlimited.
  std::optional<std::uint32_t> max_reads = 1;
  std::optional<DateTime> expires;
  bool allow_forward = false;
  std::string purpose = "inspection";

  friend bool operator==(const UsagePolicy&, const UsagePolicy&) = default;
};

/// Throws Error(InvalidPolicy).
void validate_policy(const UsagePolicy& policy, const DateTime& now);

enum class ContractState { Offered, Accepted, Active, Exhausted, Expired, Revoked };

[[nodiscard]] std::string_view to_string(ContractState s) noexcept;
[[nodiscard]] std::optional<ContractState> contract_state_from_string(std::string_view s) noexcept;

struct UsageContract {
  /// "<provider canonical>#<n>"
  std::string contract_id;
  InstanceId provider;
  InstanceId consumer;
  std::string object_uid;
  UsagePolicy policy;
  ContractState state = ContractState::Offered;
  std::uint32_t reads_done = 0;
  /// Set on contracts derived by forwarding.
  std::optional<std::string> parent;

  [[nodiscard]] std::optional<std::uint32_t> remaining() const;
  friend bool operator==(const UsageContract&, const UsageContract&) = default;
};

enum class AuditAction { Offer, Accept, Read, Delete, Deny, Revoke, Expire };

[[nodiscard]] std::string_view to_string(AuditAction a) noexcept;

struct AuditEvent {
  DateTime at;
  std::string contract_id;
  AuditAction action = AuditAction::Offer;
  std::string detail;

  friend bool operator==(const AuditEvent&, const AuditEvent&) = default;
};

/// One line of audit-<connector>.log, without the newline.
[[nodiscard]] std::string format_audit_event(const AuditEvent& e);
/// Throws Error(ParseError).
[[nodiscard]] AuditEvent parse_audit_event(std::string_view line);
[[nodiscard]] std::vector<AuditEvent> read_audit_log(const std::filesystem::path& path);

/// Contract states as reconstructed from one connector's audit log.
[[nodiscard]] std::map<std::string, UsageContract> replay(std::span<const AuditEvent> events);

/// The derived policy a forward may grant: reads clamped to the parent's
/// remaining allowance, expiry no later than the parent's.
[[nodiscard]] UsagePolicy clamp_policy(const UsageContract& parent, const UsagePolicy& requested);

enum class SovereignOp : std::uint8_t {
  Offer = 0x11,
  Accept = 0x12,
  Consume = 0x13,
  Data = 0x14,
  Forward = 0x15,
  Deny = 0x7E,
  Error = 0x7F,
};

/// Certified endpoint enforcing usage policies. One connector acts as
/// provider for the contracts it offers and as consumer for the contracts
/// addressed to it; the provider side holds the authoritative read counter.
///
/// Contract mutations are serialized per connector and consume is
/// linearizable per contract.
class Connector {
 public:
  /// archive may be null for a connector that only consumes. An empty
  /// audit_dir keeps the audit log in memory only. A set allowlist names the
  /// only peers this connector will deal with.
  Connector(InstanceId id, const Archive* archive, const LogicalClock* clock,
            std::filesystem::path audit_dir = {}, std::optional<std::set<InstanceId>> allowlist = std::nullopt);

  [[nodiscard]] const InstanceId& id() const noexcept { return id_; }
  void connect(const InstanceId& peer, FrameLink link);

  /// Throws Error(UnknownUID | InvalidPolicy | UncertifiedConnector).
  std::string offer(const InstanceId& consumer, std::string_view object_uid, const UsagePolicy& policy);
  /// Throws Error(UnknownContract | WrongConsumer | WrongState | UncertifiedConnector).
  void accept(const std::string& contract_id);
  /// Throws Error(UnknownContract | PolicyExhausted | PolicyExpired | WrongState).
  DataObject consume(const std::string& contract_id);
  /// Throws Error(UnknownContract | WrongState | ForwardProhibited | UncertifiedConnector).
  std::string forward(const std::string& contract_id, const InstanceId& third_party, const UsagePolicy& requested);
  /// Provider side. Throws Error(UnknownContract | WrongState).
  void revoke(const std::string& contract_id);

  /// SOVEREIGN-channel endpoint.
  [[nodiscard]] Frame handle(const Frame& request);

  [[nodiscard]] std::optional<UsageContract> contract(const std::string& contract_id) const;
  /// Ordered by contract id.
  [[nodiscard]] std::vector<UsageContract> contracts() const;
  /// Offers announced by providers and not yet accepted.
  [[nodiscard]] std::vector<UsageContract> inbox() const;
  [[nodiscard]] std::vector<AuditEvent> audit() const;
  [[nodiscard]] std::size_t cached_bytes(const std::string& contract_id) const;
  [[nodiscard]] std::size_t cache_bytes() const;
  [[nodiscard]] std::filesystem::path audit_path() const;

 private:
  [[nodiscard]] DateTime now() const;
  [[nodiscard]] bool certified(const InstanceId& peer) const;
  void require_certified(const InstanceId& peer) const;
  void record(const std::string& contract_id, AuditAction action, std::string detail);
  void erase_cache(const std::string& contract_id);
  std::shared_ptr<std::mutex> contract_lock(const std::string& contract_id);
  FrameLink link_to(const InstanceId& peer) const;
  FrameLink provider_link(const std::string& contract_id) const;
  Bytes call(const InstanceId& peer, const FrameLink& link, SovereignOp op, ByteView body);

  Frame on_offer(ByteView body, bool derived);
  Frame on_accept(ByteView body);
  Frame on_consume(ByteView body);
  Bytes provide(const std::string& contract_id, const InstanceId& from);

  InstanceId id_;
  const Archive* archive_;
  const LogicalClock* clock_;
  std::filesystem::path audit_dir_;
  std::optional<std::set<InstanceId>> allowlist_;

  mutable std::mutex mutex_;
  std::map<std::string, UsageContract> contracts_;
  std::map<std::string, UsageContract> inbox_;
  std::map<std::string, Bytes> cache_;
  std::map<std::string, std::shared_ptr<std::mutex>> consume_locks_;
  std::map<std::string, FrameLink> links_;
  std::vector<AuditEvent> audit_;
  std::uint64_t next_contract_ = 0;
};

}  // namespace nde4
