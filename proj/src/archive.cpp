/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/archive.hpp"

#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nde4/error.hpp"
#include "wire_error.hpp"

namespace nde4 {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kChainFile = "chain.log";
constexpr std::string_view kObjectExt = ".ndeo";

std::optional<Bytes> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

struct ParsedRecord {
  ChainRecord record;
  Digest canonical_digest{};
  bool self_ok = false;
  bool uid_ok = false;
  bool time_ok = false;
  std::size_t next = 0;
};

// One on-disk record: u8 uid length | canonical bytes | SHA-256(canonical).
std::optional<ParsedRecord> parse_record(ByteView log, std::size_t pos) {
  if (pos >= log.size()) return std::nullopt;
  const std::size_t uid_len = log[pos];
  const std::size_t canonical_len = 8 + uid_len + 32 + 32 + kDateTimeSize;
  if (log.size() - pos < 1 + canonical_len + 32) return std::nullopt;
  ByteView canonical = log.subspan(pos + 1, canonical_len);
  ParsedRecord p;
  p.record.index = get_u64le(canonical);
  p.record.object_uid = to_string(canonical.subspan(8, uid_len));
  std::size_t off = 8 + uid_len;
  std::copy_n(canonical.begin() + static_cast<std::ptrdiff_t>(off), 32, p.record.object_digest.begin());
  off += 32;
  std::copy_n(canonical.begin() + static_cast<std::ptrdiff_t>(off), 32, p.record.prev_digest.begin());
  off += 32;
  auto dt = DateTime::try_parse(to_string(canonical.subspan(off, kDateTimeSize)));
  p.time_ok = dt.has_value();
  if (dt) p.record.stored_at = *dt;
  p.uid_ok = is_object_uid(p.record.object_uid);
  p.canonical_digest = sha256(canonical);
  Digest stored{};
  std::copy_n(log.begin() + static_cast<std::ptrdiff_t>(pos + 1 + canonical_len), 32, stored.begin());
  p.self_ok = stored == p.canonical_digest;
  p.next = pos + 1 + canonical_len + 32;
  return p;
}

}  // namespace

Bytes ChainRecord::canonical_bytes() const {
  Bytes out;
  out.reserve(8 + object_uid.size() + 64 + kDateTimeSize);
  put_u64le(out, index);
  put_text(out, object_uid);
  out.insert(out.end(), object_digest.begin(), object_digest.end());
  out.insert(out.end(), prev_digest.begin(), prev_digest.end());
  put_text(out, stored_at.str());
  return out;
}

std::string ChainStatus::str() const {
  if (ok) return "chain OK";
  return fmt::format("bad at index {}", first_bad.value_or(0));
}

bool QueryCriteria::matches(const DataObject& obj) const {
  if (order_id && obj.order_id() != order_id) return false;
  if (component_serial && obj.component_serial() != component_serial) return false;
  if (method && obj.method() != method) return false;
  return true;
}

Archive::Archive(fs::path dir, const Dictionary& dict, const LogicalClock* clock)
    : dir_(std::move(dir)), dict_(&dict), clock_(clock) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(Errc::IoError, fmt::format("cannot create {}: {}", dir_.string(), ec.message()));
  load();
}

fs::path Archive::default_dir() {
  if (const char* env = std::getenv("NDE4_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return "./nde4-data";
}

fs::path Archive::object_path(std::string_view uid) const {
  return dir_ / (std::string(uid) + std::string(kObjectExt));
}

fs::path Archive::chain_path() const { return dir_ / std::string(kChainFile); }

void Archive::load() {
  auto log = read_file(chain_path());
  if (!log) return;
  std::size_t pos = 0;
  while (auto p = parse_record(*log, pos)) {
    Entry e{p->record.object_uid, {}, {}, {}};
    if (p->uid_ok) {
      if (auto bytes = read_file(object_path(e.uid))) {
        try {
          DataObject obj = decode_object(*bytes);
          e.order_id = obj.order_id();
          e.serial = obj.component_serial();
          e.method = obj.method();
        } catch (const Error&) {
          // verify_chain reports it
        }
      }
    }
    by_uid_.emplace(e.uid, entries_.size());
    entries_.push_back(std::move(e));
    last_digest_ = p->canonical_digest;
    pos = p->next;
  }
}

std::string Archive::store(const DataObject& obj) {
  Report report = validate_object(*dict_, obj);
  if (!report.ok()) throw ValidationError(Errc::ValidationFailed, std::move(report));
  const std::string uid = *obj.uid();
  if (!is_object_uid(uid)) {
    throw Error(Errc::ValidationFailed, fmt::format("object UID '{}' is not [A-Za-z0-9._-]{{1,64}}", uid));
  }

  std::unique_lock lock(mutex_);
  const fs::path path = object_path(uid);
  if (by_uid_.count(uid) != 0 || fs::exists(path)) {
    throw Error(Errc::DuplicateUID, fmt::format("object '{}' already stored", uid));
  }

  const Bytes bytes = encode_object(obj);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(Errc::IoError, fmt::format("cannot write {}", tmp.string()));
    }
  }

  ChainRecord rec;
  rec.index = entries_.size();
  rec.object_uid = uid;
  rec.object_digest = sha256(bytes);
  rec.prev_digest = last_digest_;
  rec.stored_at = clock_ != nullptr ? clock_->now() : LogicalClock::epoch();
  const Bytes canonical = rec.canonical_bytes();
  const Digest self = sha256(canonical);

  Bytes disk;
  disk.reserve(1 + canonical.size() + 32);
  disk.push_back(static_cast<std::uint8_t>(uid.size()));
  disk.insert(disk.end(), canonical.begin(), canonical.end());
  disk.insert(disk.end(), self.begin(), self.end());

  std::error_code ec;
  const auto chain_size = fs::exists(chain_path()) ? fs::file_size(chain_path()) : 0;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(Errc::IoError, fmt::format("cannot commit {}", path.string()));
  }
  {
    std::ofstream out(chain_path(), std::ios::binary | std::ios::app);
    out.write(reinterpret_cast<const char*>(disk.data()), static_cast<std::streamsize>(disk.size()));
    out.flush();
    if (!out) {
      fs::remove(path, ec);
      if (fs::exists(chain_path())) fs::resize_file(chain_path(), chain_size, ec);
      throw Error(Errc::IoError, "cannot append to chain.log");
    }
  }

  by_uid_.emplace(uid, entries_.size());
  entries_.push_back(Entry{uid, obj.order_id(), obj.component_serial(), obj.method()});
  last_digest_ = self;
  return uid;
}

Bytes Archive::fetch_bytes(std::string_view uid) const {
  {
    std::shared_lock lock(mutex_);
    if (by_uid_.find(uid) == by_uid_.end()) {
      throw Error(Errc::UnknownUID, fmt::format("no object '{}'", uid));
    }
  }
  auto bytes = read_file(object_path(uid));
  if (!bytes) throw Error(Errc::IoError, fmt::format("object file for '{}' is missing", uid));
  return std::move(*bytes);
}

DataObject Archive::fetch(std::string_view uid) const { return decode_object(fetch_bytes(uid)); }

bool Archive::contains(std::string_view uid) const {
  std::shared_lock lock(mutex_);
  return by_uid_.find(uid) != by_uid_.end();
}

std::vector<std::string> Archive::query(const QueryCriteria& c) const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (c.order_id && e.order_id != c.order_id) continue;
    if (c.component_serial && e.serial != c.component_serial) continue;
    if (c.method && e.method != c.method) continue;
    out.push_back(e.uid);
  }
  return out;
}

std::vector<std::string> Archive::list() const { return query(QueryCriteria{}); }

std::size_t Archive::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<ChainRecord> Archive::records() const {
  std::shared_lock lock(mutex_);
  std::vector<ChainRecord> out;
  auto log = read_file(chain_path());
  if (!log) return out;
  std::size_t pos = 0;
  while (auto p = parse_record(*log, pos)) {
    out.push_back(p->record);
    pos = p->next;
  }
  return out;
}

ChainStatus Archive::verify_chain() const {
  std::shared_lock lock(mutex_);
  auto bad = [](std::uint64_t k, std::string why) { return ChainStatus{false, k, std::move(why)}; };

  Bytes log = read_file(chain_path()).value_or(Bytes{});
  std::set<std::string> covered;
  Digest prev{};
  std::uint64_t k = 0;
  std::size_t pos = 0;
  while (pos < log.size()) {
    auto p = parse_record(log, pos);
    if (!p) return bad(k, "truncated chain record");
    if (!p->self_ok) return bad(k, "record digest mismatch");
    if (p->record.index != k) return bad(k, fmt::format("record claims index {}", p->record.index));
    if (!p->uid_ok || !p->time_ok) return bad(k, "malformed record fields");
    if (p->record.prev_digest != prev) return bad(k, "broken link to previous record");
    auto bytes = read_file(object_path(p->record.object_uid));
    if (!bytes) return bad(k, fmt::format("object '{}' missing", p->record.object_uid));
    if (sha256(*bytes) != p->record.object_digest) {
      return bad(k, fmt::format("object '{}' digest mismatch", p->record.object_uid));
    }
    covered.insert(p->record.object_uid);
    prev = p->canonical_digest;
    pos = p->next;
    ++k;
  }

  // An object file without a chain record means the chain lost its tail.
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    const fs::path& path = entry.path();
    if (path.extension() != kObjectExt) continue;
    if (covered.count(path.stem().string()) == 0) {
      return bad(k, fmt::format("object '{}' has no chain record", path.stem().string()));
    }
  }
  return ChainStatus{};
}

ArchiveProbe Archive::probe() const {
  return [this](std::string_view uid) -> std::optional<std::string> {
    std::shared_lock lock(mutex_);
    auto it = by_uid_.find(uid);
    if (it == by_uid_.end()) return std::nullopt;
    return entries_[it->second].order_id.value_or("");
  };
}

namespace {

Frame archive_reply(ArchiveOp op, ByteView body) {
  Frame f{Channel::Archive, {}};
  f.payload.reserve(1 + body.size());
  f.payload.push_back(static_cast<std::uint8_t>(op));
  f.payload.insert(f.payload.end(), body.begin(), body.end());
  return f;
}

}  // namespace

Frame handle_archive_frame(Archive& archive, const Frame& request) {
  try {
    if (request.channel != Channel::Archive || request.payload.empty()) {
      throw Error(Errc::BadChannel, "expected a non-empty ARCHIVE frame");
    }
    ByteView body = ByteView(request.payload).subspan(1);
    switch (static_cast<ArchiveOp>(request.payload[0])) {
      case ArchiveOp::Store: {
        std::string uid = archive.store(decode_object(body));
        return archive_reply(ArchiveOp::Result, to_bytes(uid));
      }
      case ArchiveOp::Fetch:
        return archive_reply(ArchiveOp::Result, archive.fetch_bytes(to_string(body)));
      case ArchiveOp::Query: {
        auto j = nlohmann::json::parse(body.begin(), body.end(), nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw Error(Errc::ParseError, "QUERY body is not a JSON object");
        QueryCriteria c;
        if (j.contains("order_id")) c.order_id = j["order_id"].get<std::string>();
        if (j.contains("component_serial")) c.component_serial = j["component_serial"].get<std::string>();
        if (j.contains("method")) c.method = j["method"].get<std::string>();
        return archive_reply(ArchiveOp::Result, to_bytes(nlohmann::json(archive.query(c)).dump()));
      }
      default:
        throw Error(Errc::ParseError, fmt::format("unknown ARCHIVE opcode 0x{:02x}", request.payload[0]), 0);
    }
  } catch (const Error& e) {
    return archive_reply(ArchiveOp::Error, detail::error_body(e));
  } catch (const nlohmann::json::exception& e) {
    return archive_reply(ArchiveOp::Error, detail::error_body(Error(Errc::ParseError, e.what())));
  }
}

Bytes ArchiveClient::call(ArchiveOp op, ByteView body) {
  Frame response = link_(archive_reply(op, body));
  if (response.channel != Channel::Archive || response.payload.empty()) {
    throw Error(Errc::BadChannel, "malformed ARCHIVE response");
  }
  ByteView rest = ByteView(response.payload).subspan(1);
  if (response.payload[0] == static_cast<std::uint8_t>(ArchiveOp::Error)) detail::rethrow_error_body(rest);
  return Bytes(rest.begin(), rest.end());
}

std::string ArchiveClient::store(const DataObject& obj) {
  return to_string(call(ArchiveOp::Store, encode_object(obj)));
}

DataObject ArchiveClient::fetch(std::string_view uid) {
  return decode_object(call(ArchiveOp::Fetch, to_bytes(uid)));
}

std::vector<std::string> ArchiveClient::query(const QueryCriteria& c) {
  nlohmann::json j = nlohmann::json::object();
  if (c.order_id) j["order_id"] = *c.order_id;
  if (c.component_serial) j["component_serial"] = *c.component_serial;
  if (c.method) j["method"] = *c.method;
  Bytes out = call(ArchiveOp::Query, to_bytes(j.dump()));
  return nlohmann::json::parse(out.begin(), out.end()).get<std::vector<std::string>>();
}

}  // namespace nde4
