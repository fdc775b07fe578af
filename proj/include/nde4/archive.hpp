/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "nde4/data_object.hpp"
#include "nde4/datetime.hpp"
#include "nde4/digest.hpp"
#include "nde4/frame.hpp"
#include "nde4/semantics.hpp"

namespace nde4 {

struct ChainRecord {
  std::uint64_t index = 0;
  std::string object_uid;
  Digest object_digest{};
  Digest prev_digest{};
  DateTime stored_at;

  /// index u64 LE | uid | object digest | prev digest | DATETIME
  [[nodiscard]] Bytes canonical_bytes() const;
  friend bool operator==(const ChainRecord&, const ChainRecord&) = default;
};

struct ChainStatus {
  bool ok = true;
  std::optional<std::uint64_t> first_bad;
  std::string reason;

  /// "chain OK" or "bad at index k"
  [[nodiscard]] std::string str() const;
};

/// Conjunction of the supplied fields; an empty criteria matches everything.
struct QueryCriteria {
  std::optional<std::string> order_id;
  std::optional<std::string> component_serial;
  std::optional<std::string> method;

  [[nodiscard]] bool matches(const DataObject& obj) const;
};

/// Order id of a fetchable stored object, or nullopt when the UID is unknown.
using ArchiveProbe = std::function<std::optional<std::string>(std::string_view uid)>;

/// Append-only object store with a SHA-256 digest chain.
///
/// Layout under dir(): one "<uid>.ndeo" file per object plus "chain.log".
/// No operation rewrites or deletes a committed object or chain record.
/// Stores are serialized; fetch, query and verify run concurrently with each
/// other and only observe committed objects.
class Archive {
 public:
  explicit Archive(std::filesystem::path dir, const Dictionary& dict = Dictionary::standard(),
                   const LogicalClock* clock = nullptr);

  /// NDE4_DATA_DIR, or "./nde4-data".
  [[nodiscard]] static std::filesystem::path default_dir();

  /// Throws ValidationError(ValidationFailed), Error(DuplicateUID | IoError).
  std::string store(const DataObject& obj);

  /// Throws Error(UnknownUID).
  [[nodiscard]] DataObject fetch(std::string_view uid) const;
  [[nodiscard]] Bytes fetch_bytes(std::string_view uid) const;
  [[nodiscard]] bool contains(std::string_view uid) const;

  /// UIDs in store order.
  [[nodiscard]] std::vector<std::string> query(const QueryCriteria& criteria) const;
  [[nodiscard]] std::vector<std::string> list() const;
  [[nodiscard]] std::size_t size() const;

  [[nodiscard]] ChainStatus verify_chain() const;
  [[nodiscard]] std::vector<ChainRecord> records() const;

  [[nodiscard]] ArchiveProbe probe() const;
  [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }
  [[nodiscard]] std::filesystem::path object_path(std::string_view uid) const;
  [[nodiscard]] std::filesystem::path chain_path() const;

 private:
  struct Entry {
    std::string uid;
    std::optional<std::string> order_id;
    std::optional<std::string> serial;
    std::optional<std::string> method;
  };

  void load();

  std::filesystem::path dir_;
  const Dictionary* dict_;
  const LogicalClock* clock_;
  mutable std::shared_mutex mutex_;
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> by_uid_;
  Digest last_digest_{};
};

enum class ArchiveOp : std::uint8_t {
  Store = 0x01,
  Fetch = 0x02,
  Query = 0x03,
  Result = 0x04,
  Error = 0x7F,
};

/// Server side of the ARCHIVE channel.
[[nodiscard]] Frame handle_archive_frame(Archive& archive, const Frame& request);

/// Client side of the ARCHIVE channel; remote errors are rethrown as Error.
class ArchiveClient {
 public:
  explicit ArchiveClient(FrameLink link) : link_(std::move(link)) {}

  std::string store(const DataObject& obj);
  [[nodiscard]] DataObject fetch(std::string_view uid);
  [[nodiscard]] std::vector<std::string> query(const QueryCriteria& criteria);

 private:
  Bytes call(ArchiveOp op, ByteView body);
  FrameLink link_;
};

}  // namespace nde4
