/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include <atomic>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "nde4/archive.hpp"
#include "support.hpp"

namespace nde4::test {
namespace {

namespace fs = std::filesystem;

void flip_byte(const fs::path& path, std::uint64_t offset) {
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(static_cast<std::streamoff>(offset));
  char c = 0;
  f.get(c);
  f.seekp(static_cast<std::streamoff>(offset));
  f.put(static_cast<char>(c ^ 0x01));
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "nothing thrown";
  return Errc::IoError;
}

TEST(Archive, StoreFetchQuery) {
  TempDir d("arc");
  LogicalClock clock;
  Archive a(d / "s", Dictionary::standard(), &clock);
  const DataObject obj = make_object("ut-7", "ORD-7", "S-99", "UT");
  EXPECT_EQ(a.store(obj), "ut-7");
  EXPECT_EQ(a.fetch("ut-7"), obj);
  EXPECT_EQ(a.query({"ORD-7", std::nullopt, std::nullopt}), std::vector<std::string>{"ut-7"});
  EXPECT_TRUE(a.query({"ORD-8", std::nullopt, std::nullopt}).empty());
  EXPECT_EQ(a.query({}), std::vector<std::string>{"ut-7"});
  EXPECT_TRUE(a.contains("ut-7"));
  EXPECT_EQ(a.probe()("ut-7"), "ORD-7");
  EXPECT_EQ(a.probe()("nope"), std::nullopt);
  EXPECT_EQ(a.fetch_bytes("ut-7"), encode_object(obj));
  EXPECT_TRUE(fs::exists(a.object_path("ut-7")));
}

TEST(Archive, RejectsInvalidAndDuplicate) {
  TempDir d("arc");
  Archive a(d / "s");
  DataObject no_order = make_object("x1", "ORD-1");
  no_order = DataObject(std::vector<Element>(no_order.elements().begin(), no_order.elements().end() - 1));
  try {
    a.store(no_order);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.code(), Errc::ValidationFailed);
    EXPECT_TRUE(e.report().contains(FindingKind::MissingMandatory));
  }
  a.store(make_object("x1", "ORD-1"));
  EXPECT_EQ(code_of([&] { a.store(make_object("x1", "ORD-2")); }), Errc::DuplicateUID);
  EXPECT_EQ(code_of([&] { a.store(make_object("../escape", "ORD-2")); }), Errc::ValidationFailed);
  EXPECT_EQ(code_of([&] { (void)a.fetch("x2"); }), Errc::UnknownUID);
  EXPECT_EQ(a.size(), 1U);
}

TEST(Archive, ChainRecordsLinkAndUseTheLogicalClock) {
  TempDir d("arc");
  LogicalClock clock;
  Archive a(d / "s", Dictionary::standard(), &clock);
  for (int i = 0; i < 3; ++i) {
    clock.advance_to(10 * (i + 1));
    a.store(make_object(fmt::format("o{}", i), "ORD-1"));
  }
  const auto recs = a.records();
  ASSERT_EQ(recs.size(), 3U);
  Digest prev{};
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].index, i);
    EXPECT_EQ(recs[i].prev_digest, prev);
    EXPECT_EQ(recs[i].object_digest, sha256(a.fetch_bytes(recs[i].object_uid)));
    EXPECT_EQ(recs[i].stored_at, LogicalClock::at(10 * static_cast<long>(i + 1)));
    prev = sha256(recs[i].canonical_bytes());
  }
}

TEST(Archive, ReopenSeesCommittedObjects) {
  TempDir d("arc");
  {
    Archive a(d / "s");
    for (int i = 0; i < 5; ++i) a.store(make_object(fmt::format("o{}", i), fmt::format("ORD-{}", i % 2)));
  }
  Archive b(d / "s");
  EXPECT_EQ(b.size(), 5U);
  EXPECT_EQ(b.list(), (std::vector<std::string>{"o0", "o1", "o2", "o3", "o4"}));
  EXPECT_EQ(b.query({"ORD-1", std::nullopt, std::nullopt}), (std::vector<std::string>{"o1", "o3"}));
  b.store(make_object("o5", "ORD-1"));
  EXPECT_TRUE(b.verify_chain().ok);
}

TEST(VerifyChain, PristineStoreIsOk) {
  TempDir d("arc");
  Archive a(d / "s");
  EXPECT_EQ(a.verify_chain().str(), "chain OK");
  for (int i = 0; i < 10; ++i) a.store(make_object(fmt::format("o{}", i), "ORD-1"));
  const ChainStatus st = a.verify_chain();
  EXPECT_TRUE(st.ok);
  EXPECT_FALSE(st.first_bad.has_value());
}

TEST(VerifyChain, FlipInObjectFourReportsFour) {
  TempDir d("arc");
  Archive a(d / "s");
  for (int i = 0; i < 10; ++i) a.store(make_object(fmt::format("o{}", i), "ORD-1"));
  flip_byte(a.object_path("o4"), fs::file_size(a.object_path("o4")) - 1);
  const ChainStatus st = a.verify_chain();
  EXPECT_FALSE(st.ok);
  EXPECT_EQ(st.first_bad, 4U);
  EXPECT_EQ(st.str(), "bad at index 4");
}

TEST(VerifyChain, MissingTailIsDetected) {
  TempDir d("arc");
  Archive a(d / "s");
  for (int i = 0; i < 10; ++i) a.store(make_object(fmt::format("o{}", i), "ORD-1"));
  const auto size = fs::file_size(a.chain_path());
  const auto last = size - size / 10;  // records are equal-sized here
  fs::resize_file(a.chain_path(), last);
  const ChainStatus st = a.verify_chain();
  EXPECT_FALSE(st.ok);
  EXPECT_EQ(st.first_bad, 9U);

  fs::resize_file(a.chain_path(), last - 3);
  EXPECT_EQ(a.verify_chain().first_bad, 8U);
}

TEST(VerifyChain, DeletedObjectIsDetected) {
  TempDir d("arc");
  Archive a(d / "s");
  for (int i = 0; i < 4; ++i) a.store(make_object(fmt::format("o{}", i), "ORD-1"));
  fs::remove(a.object_path("o2"));
  EXPECT_EQ(a.verify_chain().first_bad, 2U);
}

TEST(ArchiveOracle, QueryEqualsLinearScan) {
  TempDir d("arc");
  Archive a(d / "s");
  Rng rng(17);
  const std::vector<std::string> methods = {"UT", "RT", "ET"};
  for (int i = 0; i < 120; ++i) {
    a.store(make_object(fmt::format("o{}", i), fmt::format("ORD-{}", rng.below(8)), fmt::format("S-{}", rng.below(6)),
                        methods[rng.below(3)]));
  }
  EXPECT_EQ(a.query({std::nullopt, "S-99", "UT"}), oracle_query(a.dir(), {std::nullopt, "S-99", "UT"}));
  for (int i = 0; i < 200; ++i) {
    QueryCriteria c;
    if (rng.below(2) != 0) c.order_id = fmt::format("ORD-{}", rng.below(9));
    if (rng.below(2) != 0) c.component_serial = fmt::format("S-{}", rng.below(7));
    if (rng.below(2) != 0) c.method = methods[rng.below(3)];
    ASSERT_EQ(a.query(c), oracle_query(a.dir(), c)) << i;
  }
}

TEST(Archive, ConcurrentStoresAndReads) {
  TempDir d("arc");
  Archive a(d / "s");
  std::atomic<bool> stop{false};
  std::thread reader([&] {
    while (!stop) {
      for (const auto& uid : a.list()) EXPECT_NO_THROW((void)a.fetch(uid));
      EXPECT_TRUE(a.verify_chain().ok);
    }
  });
  std::vector<std::thread> writers;
  for (int w = 0; w < 4; ++w) {
    writers.emplace_back([&, w] {
      for (int i = 0; i < 25; ++i) a.store(make_object(fmt::format("w{}-{}", w, i), "ORD-1"));
    });
  }
  for (auto& t : writers) t.join();
  stop = true;
  reader.join();
  EXPECT_EQ(a.size(), 100U);
  EXPECT_TRUE(a.verify_chain().ok);
  const auto recs = a.records();
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(recs[i].index, i);
}

TEST(ArchiveWire, ClientRoundTrip) {
  TempDir d("arc");
  Archive a(d / "s");
  ArchiveClient client(loopback_link([&](const Frame& f) { return handle_archive_frame(a, f); }));
  const DataObject obj = make_object("w1", "ORD-7");
  EXPECT_EQ(client.store(obj), "w1");
  EXPECT_EQ(client.fetch("w1"), obj);
  EXPECT_EQ(client.query({"ORD-7", std::nullopt, std::nullopt}), std::vector<std::string>{"w1"});
  EXPECT_EQ(code_of([&] { client.store(obj); }), Errc::DuplicateUID);
  EXPECT_EQ(code_of([&] { (void)client.fetch("w2"); }), Errc::UnknownUID);
  const Frame bad = handle_archive_frame(a, Frame{Channel::Archive, Bytes{0x42}});
  ASSERT_FALSE(bad.payload.empty());
  EXPECT_EQ(bad.payload[0], static_cast<std::uint8_t>(ArchiveOp::Error));
}

}  // namespace
}  // namespace nde4::test
