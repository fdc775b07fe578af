/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/sovereignty.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nde4/error.hpp"
#include "wire_error.hpp"

namespace nde4 {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 6> kStateNames = {"OFFERED",   "ACCEPTED", "ACTIVE",
                                                         "EXHAUSTED", "EXPIRED",  "REVOKED"};
constexpr std::array<std::string_view, 7> kActionNames = {"OFFER", "ACCEPT", "READ",  "DELETE",
                                                          "DENY",  "REVOKE", "EXPIRE"};

bool is_final(ContractState s) {
  return s == ContractState::Exhausted || s == ContractState::Expired || s == ContractState::Revoked;
}

json policy_json(const UsagePolicy& p) {
  json j = {{"max_reads", nullptr}, {"expires", nullptr}, {"allow_forward", p.allow_forward}, {"purpose", p.purpose}};
  if (p.max_reads) j["max_reads"] = *p.max_reads;
  if (p.expires) j["expires"] = p.expires->str();
  return j;
}

UsagePolicy policy_from(const json& j) {
  UsagePolicy p;
  p.max_reads = j.at("max_reads").is_null() ? std::nullopt
                                            : std::optional<std::uint32_t>(j.at("max_reads").get<std::uint32_t>());
  if (!j.at("expires").is_null()) p.expires = DateTime::parse(j.at("expires").get<std::string>());
  p.allow_forward = j.at("allow_forward").get<bool>();
  p.purpose = j.at("purpose").get<std::string>();
  return p;
}

json contract_json(const UsageContract& c) {
  json j = {{"contract_id", c.contract_id},
            {"provider", c.provider.canonical()},
            {"consumer", c.consumer.canonical()},
            {"object_uid", c.object_uid},
            {"policy", policy_json(c.policy)},
            {"state", to_string(c.state)},
            {"reads_done", c.reads_done}};
  if (c.parent) j["parent"] = *c.parent;
  return j;
}

UsageContract contract_from(const json& j) {
  UsageContract c;
  c.contract_id = j.at("contract_id").get<std::string>();
  c.provider = parse_instance_id(j.at("provider").get<std::string>());
  c.consumer = parse_instance_id(j.at("consumer").get<std::string>());
  c.object_uid = j.at("object_uid").get<std::string>();
  c.policy = policy_from(j.at("policy"));
  auto s = contract_state_from_string(j.at("state").get<std::string>());
  if (!s) throw Error(Errc::ParseError, "unknown contract state", 0);
  c.state = *s;
  c.reads_done = j.at("reads_done").get<std::uint32_t>();
  if (j.contains("parent")) c.parent = j.at("parent").get<std::string>();
  return c;
}

json parse_body(ByteView body) {
  auto j = json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::ParseError, "SOVEREIGN body is not a JSON object", 0);
  return j;
}

bool is_denial(Errc code) {
  switch (code) {
    case Errc::PolicyExhausted:
    case Errc::PolicyExpired:
    case Errc::ForwardProhibited:
    case Errc::WrongConsumer:
    case Errc::UncertifiedConnector:
      return true;
    default:
      return false;
  }
}

Frame reply(SovereignOp op, ByteView body) {
  Frame f{Channel::Sovereign, {}};
  f.payload.reserve(1 + body.size());
  f.payload.push_back(static_cast<std::uint8_t>(op));
  f.payload.insert(f.payload.end(), body.begin(), body.end());
  return f;
}

std::string sanitize(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '.' || c == '_';
    if (!keep) c = '_';
  }
  return out;
}

}  // namespace

std::string_view to_string(ContractState s) noexcept { return kStateNames[static_cast<std::size_t>(s)]; }

std::optional<ContractState> contract_state_from_string(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kStateNames.size(); ++i) {
    if (kStateNames[i] == s) return static_cast<ContractState>(i);
  }
  return std::nullopt;
}

std::string_view to_string(AuditAction a) noexcept { return kActionNames[static_cast<std::size_t>(a)]; }

void validate_policy(const UsagePolicy& p, const DateTime& now) {
  if (p.max_reads && *p.max_reads == 0) throw Error(Errc::InvalidPolicy, "max_reads must be at least 1");
  if (p.expires && *p.expires <= now) {
    throw Error(Errc::InvalidPolicy, fmt::format("expiry {} is not after {}", p.expires->str(), now.str()));
  }
  if (!is_name_token(p.purpose)) throw Error(Errc::InvalidPolicy, fmt::format("bad purpose '{}'", p.purpose));
}

std::optional<std::uint32_t> UsageContract::remaining() const {
  if (!policy.max_reads) return std::nullopt;
  return *policy.max_reads > reads_done ? *policy.max_reads - reads_done : 0U;
}

UsagePolicy clamp_policy(const UsageContract& parent, const UsagePolicy& requested) {
  UsagePolicy p;
  auto rem = parent.remaining();
  if (rem && requested.max_reads) {
    p.max_reads = std::min(*rem, *requested.max_reads);
  } else {
    p.max_reads = rem ? rem : requested.max_reads;
  }
  const auto& a = parent.policy.expires;
  const auto& b = requested.expires;
  p.expires = (a && b) ? std::optional(std::min(*a, *b)) : (a ? a : b);
  p.allow_forward = parent.policy.allow_forward && requested.allow_forward;
  p.purpose = parent.policy.purpose;
  return p;
}

// --- audit log ------------------------------------------------------------------

std::string format_audit_event(const AuditEvent& e) {
  return fmt::format("{}\t{}\t{}\t{}", e.at.str(), e.contract_id, to_string(e.action), e.detail);
}

AuditEvent parse_audit_event(std::string_view line) {
  std::array<std::string_view, 4> cols;
  std::size_t start = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) throw Error(Errc::ParseError, "audit line needs 4 columns", line.size());
    cols[i] = line.substr(start, tab - start);
    start = tab + 1;
  }
  cols[3] = line.substr(start);
  AuditEvent e;
  auto at = DateTime::try_parse(cols[0]);
  if (!at) throw Error(Errc::ParseError, "bad audit timestamp", 0);
  e.at = *at;
  e.contract_id = std::string(cols[1]);
  auto it = std::find(kActionNames.begin(), kActionNames.end(), cols[2]);
  if (it == kActionNames.end()) {
    throw Error(Errc::ParseError, fmt::format("unknown audit action '{}'", cols[2]),
                static_cast<std::size_t>(cols[2].data() - line.data()));
  }
  e.action = static_cast<AuditAction>(it - kActionNames.begin());
  e.detail = std::string(cols[3]);
  return e;
}

std::vector<AuditEvent> read_audit_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, fmt::format("cannot read {}", path.string()));
  std::vector<AuditEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_audit_event(line));
  }
  return out;
}

// Every detail is a JSON object; "contract", "reads_done" and "state" keys
// carry the state change the event caused.
std::map<std::string, UsageContract> replay(std::span<const AuditEvent> events) {
  std::map<std::string, UsageContract> out;
  for (const auto& e : events) {
    auto j = json::parse(e.detail, nullptr, false);
    if (!j.is_object()) continue;
    if (j.contains("contract")) out[e.contract_id] = contract_from(j["contract"]);
    auto it = out.find(e.contract_id);
    if (it == out.end()) continue;
    if (j.contains("reads_done")) it->second.reads_done = j["reads_done"].get<std::uint32_t>();
    if (j.contains("state")) {
      if (auto s = contract_state_from_string(j["state"].get<std::string>())) it->second.state = *s;
    }
  }
  return out;
}

// --- connector ----------------------------------------------------------------------

Connector::Connector(InstanceId id, const Archive* archive, const LogicalClock* clock,
                     std::filesystem::path audit_dir, std::optional<std::set<InstanceId>> allowlist)
    : id_(std::move(id)),
      archive_(archive),
      clock_(clock),
      audit_dir_(std::move(audit_dir)),
      allowlist_(std::move(allowlist)) {
  if (!audit_dir_.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(audit_dir_, ec);
    if (ec) throw Error(Errc::IoError, fmt::format("cannot create {}: {}", audit_dir_.string(), ec.message()));
  }
}

DateTime Connector::now() const { return clock_ != nullptr ? clock_->now() : LogicalClock::epoch(); }

bool Connector::certified(const InstanceId& peer) const { return !allowlist_ || allowlist_->count(peer) != 0; }

void Connector::require_certified(const InstanceId& peer) const {
  if (!certified(peer)) {
    throw Error(Errc::UncertifiedConnector, fmt::format("{} is not on the allowlist of {}", peer.canonical(),
                                                        id_.canonical()));
  }
}

std::filesystem::path Connector::audit_path() const {
  if (audit_dir_.empty()) return {};
  return audit_dir_ / fmt::format("audit-{}.log", sanitize(id_.canonical()));
}

// Caller holds mutex_.
void Connector::record(const std::string& contract_id, AuditAction action, std::string detail) {
  AuditEvent e{now(), contract_id, action, std::move(detail)};
  if (!audit_dir_.empty()) {
    std::ofstream out(audit_path(), std::ios::app);
    out << format_audit_event(e) << '\n';
    if (!out) throw Error(Errc::IoError, fmt::format("cannot append to {}", audit_path().string()));
  }
  audit_.push_back(std::move(e));
}

// Caller holds mutex_.
void Connector::erase_cache(const std::string& contract_id) {
  auto it = cache_.find(contract_id);
  if (it == cache_.end()) return;
  const std::size_t n = it->second.size();
  std::fill(it->second.begin(), it->second.end(), std::uint8_t{0});
  cache_.erase(it);
  record(contract_id, AuditAction::Delete, json{{"bytes", n}}.dump());
}

std::shared_ptr<std::mutex> Connector::contract_lock(const std::string& contract_id) {
  std::lock_guard lock(mutex_);
  auto& m = consume_locks_[contract_id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

void Connector::connect(const InstanceId& peer, FrameLink link) {
  std::lock_guard lock(mutex_);
  links_[peer.canonical()] = std::move(link);
}

FrameLink Connector::link_to(const InstanceId& peer) const {
  std::lock_guard lock(mutex_);
  auto it = links_.find(peer.canonical());
  return it == links_.end() ? FrameLink{} : it->second;
}

FrameLink Connector::provider_link(const std::string& contract_id) const {
  auto hash = contract_id.rfind('#');
  if (hash == std::string::npos) throw Error(Errc::UnknownContract, fmt::format("'{}' is not a contract id", contract_id));
  InstanceId provider;
  try {
    provider = parse_instance_id(std::string_view(contract_id).substr(0, hash));
  } catch (const Error&) {
    throw Error(Errc::UnknownContract, fmt::format("'{}' is not a contract id", contract_id));
  }
  require_certified(provider);
  FrameLink link = link_to(provider);
  if (!link) throw Error(Errc::UnknownContract, fmt::format("no route to provider of '{}'", contract_id));
  return link;
}

Bytes Connector::call(const InstanceId& peer, const FrameLink& link, SovereignOp op, ByteView body) {
  require_certified(peer);
  Frame response = link(reply(op, body));
  if (response.channel != Channel::Sovereign || response.payload.empty()) {
    throw Error(Errc::BadChannel, "malformed SOVEREIGN response");
  }
  ByteView rest = ByteView(response.payload).subspan(1);
  const auto got = static_cast<SovereignOp>(response.payload[0]);
  if (got == SovereignOp::Deny || got == SovereignOp::Error) detail::rethrow_error_body(rest);
  return Bytes(rest.begin(), rest.end());
}

std::string Connector::offer(const InstanceId& consumer, std::string_view object_uid, const UsagePolicy& policy) {
  if (archive_ == nullptr || !archive_->contains(object_uid)) {
    throw Error(Errc::UnknownUID, fmt::format("no object '{}' to offer", object_uid));
  }
  validate_policy(policy, now());
  if (consumer == id_) throw Error(Errc::WrongConsumer, "a connector cannot contract with itself");
  require_certified(consumer);

  UsageContract c;
  {
    std::lock_guard lock(mutex_);
    c = UsageContract{fmt::format("{}#{}", id_.canonical(), next_contract_++), id_, consumer,
                      std::string(object_uid), policy, ContractState::Offered, 0, std::nullopt};
    contracts_[c.contract_id] = c;
    record(c.contract_id, AuditAction::Offer, json{{"contract", contract_json(c)}}.dump());
  }
  // Announcing is best effort; the consumer can accept by id regardless.
  if (FrameLink link = link_to(consumer)) {
    try {
      call(consumer, link, SovereignOp::Offer,
           to_bytes(json{{"from", id_.canonical()}, {"contract", contract_json(c)}}.dump()));
    } catch (const Error&) {
    }
  }
  return c.contract_id;
}

void Connector::accept(const std::string& contract_id) {
  {
    std::lock_guard lock(mutex_);
    auto it = contracts_.find(contract_id);
    if (it != contracts_.end()) {
      if (it->second.consumer != id_) {
        throw Error(Errc::WrongConsumer, fmt::format("'{}' is not addressed to {}", contract_id, id_.canonical()));
      }
      throw Error(Errc::WrongState, fmt::format("'{}' is already {}", contract_id, to_string(it->second.state)));
    }
  }
  FrameLink link = provider_link(contract_id);
  const auto provider = parse_instance_id(std::string_view(contract_id).substr(0, contract_id.rfind('#')));
  Bytes body = call(provider, link, SovereignOp::Accept,
                    to_bytes(json{{"from", id_.canonical()}, {"contract_id", contract_id}}.dump()));
  UsageContract c = contract_from(parse_body(body).at("contract"));

  std::lock_guard lock(mutex_);
  contracts_[contract_id] = c;
  inbox_.erase(contract_id);
  record(contract_id, AuditAction::Accept, json{{"contract", contract_json(c)}}.dump());
}

DataObject Connector::consume(const std::string& contract_id) {
  auto guard = contract_lock(contract_id);
  std::lock_guard serial(*guard);

  InstanceId provider;
  {
    std::lock_guard lock(mutex_);
    auto it = contracts_.find(contract_id);
    if (it == contracts_.end() || it->second.consumer != id_) {
      throw Error(Errc::UnknownContract, fmt::format("{} holds no contract '{}'", id_.canonical(), contract_id));
    }
    UsageContract& c = it->second;
    auto refuse = [&](Errc code, std::string msg) {
      record(contract_id, AuditAction::Deny, json{{"error", to_string(code)}}.dump());
      return Error(code, std::move(msg));
    };
    if (c.state == ContractState::Active && c.policy.expires && now() >= *c.policy.expires) {
      c.state = ContractState::Expired;
      record(contract_id, AuditAction::Expire, json{{"state", to_string(c.state)}}.dump());
      erase_cache(contract_id);
    }
    switch (c.state) {
      case ContractState::Active:
        break;
      case ContractState::Exhausted:
        throw refuse(Errc::PolicyExhausted, fmt::format("'{}' allowed {} read(s)", contract_id, c.reads_done));
      case ContractState::Expired:
        throw refuse(Errc::PolicyExpired, fmt::format("'{}' has expired", contract_id));
      case ContractState::Revoked:
        throw refuse(Errc::WrongState, fmt::format("'{}' was revoked", contract_id));
      default:
        throw Error(Errc::WrongState, fmt::format("'{}' is {}", contract_id, to_string(c.state)));
    }
    provider = c.provider;
  }

  FrameLink link = provider_link(contract_id);
  Bytes body;
  try {
    body = call(provider, link, SovereignOp::Consume,
                to_bytes(json{{"from", id_.canonical()}, {"contract_id", contract_id}}.dump()));
  } catch (const Error& e) {
    std::lock_guard lock(mutex_);
    UsageContract& c = contracts_.at(contract_id);
    std::optional<ContractState> next;
    if (e.code() == Errc::PolicyExhausted) next = ContractState::Exhausted;
    if (e.code() == Errc::PolicyExpired) next = ContractState::Expired;
    if (e.code() == Errc::WrongState) next = ContractState::Revoked;
    if (next) {
      c.state = *next;
      erase_cache(contract_id);
      record(contract_id, AuditAction::Deny,
             json{{"error", to_string(e.code())}, {"state", to_string(c.state)}}.dump());
    }
    throw;
  }

  if (body.size() < 4) throw Error(Errc::TruncatedElement, "DATA body too short", 0);
  const std::uint32_t json_len = get_u32le(body);
  if (body.size() - 4 < json_len) throw Error(Errc::TruncatedElement, "DATA header overruns body", 4);
  json meta = parse_body(ByteView(body).subspan(4, json_len));
  Bytes object(body.begin() + 4 + json_len, body.end());
  DataObject obj = decode_object(object);

  std::lock_guard lock(mutex_);
  UsageContract& c = contracts_.at(contract_id);
  c.reads_done = meta.at("reads_done").get<std::uint32_t>();
  if (c.policy.max_reads && c.reads_done >= *c.policy.max_reads) c.state = ContractState::Exhausted;
  record(contract_id, AuditAction::Read,
         json{{"reads_done", c.reads_done}, {"state", to_string(c.state)}, {"bytes", object.size()}}.dump());
  if (c.state == ContractState::Exhausted) {
    // The last permitted view: nothing stays behind on this side.
    std::size_t wiped = object.size();
    if (auto it = cache_.find(contract_id); it != cache_.end()) {
      wiped = std::max(wiped, it->second.size());
      std::fill(it->second.begin(), it->second.end(), std::uint8_t{0});
      cache_.erase(it);
    }
    std::fill(object.begin(), object.end(), std::uint8_t{0});
    record(contract_id, AuditAction::Delete, json{{"bytes", wiped}}.dump());
  } else {
    cache_[contract_id] = std::move(object);
  }
  return obj;
}

std::string Connector::forward(const std::string& contract_id, const InstanceId& third_party,
                               const UsagePolicy& requested) {
  UsageContract derived;
  {
    std::lock_guard lock(mutex_);
    auto it = contracts_.find(contract_id);
    if (it == contracts_.end() || it->second.consumer != id_) {
      throw Error(Errc::UnknownContract, fmt::format("{} holds no contract '{}'", id_.canonical(), contract_id));
    }
    UsageContract& c = it->second;
    if (c.state == ContractState::Active && c.policy.expires && now() >= *c.policy.expires) {
      c.state = ContractState::Expired;
      record(contract_id, AuditAction::Expire, json{{"state", to_string(c.state)}}.dump());
      erase_cache(contract_id);
    }
    if (c.state != ContractState::Active) {
      throw Error(Errc::WrongState, fmt::format("'{}' is {}, not ACTIVE", contract_id, to_string(c.state)));
    }
    if (!c.policy.allow_forward) {
      record(contract_id, AuditAction::Deny,
             json{{"error", to_string(Errc::ForwardProhibited)}, {"to", third_party.canonical()}}.dump());
      throw Error(Errc::ForwardProhibited, fmt::format("'{}' may not be forwarded", contract_id));
    }
    if (third_party == id_) throw Error(Errc::WrongConsumer, "cannot forward to oneself");
    require_certified(third_party);
    UsagePolicy p = clamp_policy(c, requested);
    validate_policy(p, now());
    derived = UsageContract{fmt::format("{}#{}", id_.canonical(), next_contract_++), id_, third_party,
                            c.object_uid, p, ContractState::Offered, 0, contract_id};
    contracts_[derived.contract_id] = derived;
    record(derived.contract_id, AuditAction::Offer, json{{"contract", contract_json(derived)}}.dump());
  }
  if (FrameLink link = link_to(third_party)) {
    try {
      call(third_party, link, SovereignOp::Forward,
           to_bytes(json{{"from", id_.canonical()}, {"contract", contract_json(derived)}}.dump()));
    } catch (const Error&) {
    }
  }
  return derived.contract_id;
}

void Connector::revoke(const std::string& contract_id) {
  std::lock_guard lock(mutex_);
  auto it = contracts_.find(contract_id);
  if (it == contracts_.end() || it->second.provider != id_) {
    throw Error(Errc::UnknownContract, fmt::format("{} provides no contract '{}'", id_.canonical(), contract_id));
  }
  if (is_final(it->second.state)) {
    throw Error(Errc::WrongState, fmt::format("'{}' is already {}", contract_id, to_string(it->second.state)));
  }
  it->second.state = ContractState::Revoked;
  record(contract_id, AuditAction::Revoke, json{{"state", to_string(it->second.state)}}.dump());
}

// --- provider side ---------------------------------------------------------------

Frame Connector::on_offer(ByteView body, bool derived) {
  json j = parse_body(body);
  const InstanceId from = parse_instance_id(j.at("from").get<std::string>());
  require_certified(from);
  UsageContract c = contract_from(j.at("contract"));
  if (c.provider != from) throw Error(Errc::WrongConsumer, "offer provider does not match sender");
  if (c.consumer != id_) throw Error(Errc::WrongConsumer, fmt::format("offer is not addressed to {}", id_.canonical()));
  {
    std::lock_guard lock(mutex_);
    inbox_[c.contract_id] = c;
  }
  const auto op = derived ? SovereignOp::Forward : SovereignOp::Offer;
  return reply(op, to_bytes(json{{"contract_id", c.contract_id}}.dump()));
}

Frame Connector::on_accept(ByteView body) {
  json j = parse_body(body);
  const InstanceId from = parse_instance_id(j.at("from").get<std::string>());
  const std::string cid = j.at("contract_id").get<std::string>();
  require_certified(from);
  std::lock_guard lock(mutex_);
  auto it = contracts_.find(cid);
  if (it == contracts_.end() || it->second.provider != id_) {
    throw Error(Errc::UnknownContract, fmt::format("{} provides no contract '{}'", id_.canonical(), cid));
  }
  UsageContract& c = it->second;
  if (c.consumer != from) {
    throw Error(Errc::WrongConsumer, fmt::format("'{}' is addressed to {}, not {}", cid, c.consumer.canonical(),
                                                 from.canonical()));
  }
  if (c.state != ContractState::Offered) {
    throw Error(Errc::WrongState, fmt::format("'{}' is {}, not OFFERED", cid, to_string(c.state)));
  }
  c.state = ContractState::Accepted;
  c.state = ContractState::Active;
  record(cid, AuditAction::Accept, json{{"contract", contract_json(c)}}.dump());
  return reply(SovereignOp::Accept, to_bytes(json{{"contract", contract_json(c)}}.dump()));
}

Bytes Connector::provide(const std::string& cid, const InstanceId& from) {
  auto guard = contract_lock(cid);
  std::lock_guard serial(*guard);

  UsageContract snapshot;
  {
    std::lock_guard lock(mutex_);
    auto it = contracts_.find(cid);
    if (it == contracts_.end() || it->second.provider != id_) {
      throw Error(Errc::UnknownContract, fmt::format("{} provides no contract '{}'", id_.canonical(), cid));
    }
    UsageContract& c = it->second;
    auto refuse = [&](Errc code, std::string msg) {
      record(cid, AuditAction::Deny, json{{"error", to_string(code)}, {"from", from.canonical()}}.dump());
      return Error(code, std::move(msg));
    };
    if (c.consumer != from) throw refuse(Errc::WrongConsumer, fmt::format("'{}' is not addressed to {}", cid, from.canonical()));
    if (c.state == ContractState::Active && c.policy.expires && now() >= *c.policy.expires) {
      c.state = ContractState::Expired;
      record(cid, AuditAction::Expire, json{{"state", to_string(c.state)}}.dump());
    }
    switch (c.state) {
      case ContractState::Active:
        break;
      case ContractState::Exhausted:
        throw refuse(Errc::PolicyExhausted, fmt::format("'{}' allowed {} read(s)", cid, c.reads_done));
      case ContractState::Expired:
        throw refuse(Errc::PolicyExpired, fmt::format("'{}' has expired", cid));
      case ContractState::Revoked:
        throw refuse(Errc::WrongState, fmt::format("'{}' was revoked", cid));
      default:
        throw Error(Errc::WrongState, fmt::format("'{}' is {}", cid, to_string(c.state)));
    }
    snapshot = c;
  }

  // A derived contract is served by reading through its parent, so every
  // downstream view also counts against the upstream allowance.
  Bytes object;
  if (snapshot.parent) {
    object = encode_object(consume(*snapshot.parent));
  } else {
    if (archive_ == nullptr) throw Error(Errc::UnknownUID, fmt::format("no archive holds '{}'", snapshot.object_uid));
    object = archive_->fetch_bytes(snapshot.object_uid);
  }

  json meta;
  {
    std::lock_guard lock(mutex_);
    UsageContract& c = contracts_.at(cid);
    ++c.reads_done;
    if (c.policy.max_reads && c.reads_done >= *c.policy.max_reads) c.state = ContractState::Exhausted;
    record(cid, AuditAction::Read,
           json{{"reads_done", c.reads_done}, {"state", to_string(c.state)}, {"bytes", object.size()}}.dump());
    meta = {{"contract_id", cid}, {"reads_done", c.reads_done}, {"state", to_string(c.state)}};
  }
  const std::string m = meta.dump();
  Bytes out;
  out.reserve(4 + m.size() + object.size());
  put_u32le(out, static_cast<std::uint32_t>(m.size()));
  put_text(out, m);
  out.insert(out.end(), object.begin(), object.end());
  return out;
}

Frame Connector::on_consume(ByteView body) {
  json j = parse_body(body);
  const InstanceId from = parse_instance_id(j.at("from").get<std::string>());
  require_certified(from);
  return reply(SovereignOp::Data, provide(j.at("contract_id").get<std::string>(), from));
}

Frame Connector::handle(const Frame& request) {
  try {
    if (request.channel != Channel::Sovereign || request.payload.empty()) {
      throw Error(Errc::BadChannel, "expected a non-empty SOVEREIGN frame");
    }
    ByteView body = ByteView(request.payload).subspan(1);
    switch (static_cast<SovereignOp>(request.payload[0])) {
      case SovereignOp::Offer:
        return on_offer(body, false);
      case SovereignOp::Forward:
        return on_offer(body, true);
      case SovereignOp::Accept:
        return on_accept(body);
      case SovereignOp::Consume:
        return on_consume(body);
      default:
        throw Error(Errc::ParseError, fmt::format("unexpected SOVEREIGN opcode 0x{:02x}", request.payload[0]), 0);
    }
  } catch (const Error& e) {
    return reply(is_denial(e.code()) ? SovereignOp::Deny : SovereignOp::Error, detail::error_body(e));
  } catch (const json::exception& e) {
    return reply(SovereignOp::Error, detail::error_body(Error(Errc::ParseError, e.what())));
  }
}

// --- observers -------------------------------------------------------------------

std::optional<UsageContract> Connector::contract(const std::string& contract_id) const {
  std::lock_guard lock(mutex_);
  auto it = contracts_.find(contract_id);
  if (it == contracts_.end()) return std::nullopt;
  return it->second;
}

std::vector<UsageContract> Connector::contracts() const {
  std::lock_guard lock(mutex_);
  std::vector<UsageContract> out;
  for (const auto& [id, c] : contracts_) out.push_back(c);
  return out;
}

std::vector<UsageContract> Connector::inbox() const {
  std::lock_guard lock(mutex_);
  std::vector<UsageContract> out;
  for (const auto& [id, c] : inbox_) out.push_back(c);
  return out;
}

std::vector<AuditEvent> Connector::audit() const {
  std::lock_guard lock(mutex_);
  return audit_;
}

std::size_t Connector::cached_bytes(const std::string& contract_id) const {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(contract_id);
  return it == cache_.end() ? 0 : it->second.size();
}

std::size_t Connector::cache_bytes() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [id, b] : cache_) n += b.size();
  return n;
}

}  // namespace nde4
