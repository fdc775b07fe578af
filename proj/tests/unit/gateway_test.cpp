/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include <algorithm>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "nde4/gateway.hpp"
#include "support.hpp"

namespace nde4::test {
namespace {

using namespace tags;

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "nothing thrown";
  return Errc::IoError;
}

std::string token(Rng& rng) {
  static constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-";
  std::string s(1 + rng.below(20), 'x');
  for (auto& c : s) c = kAlphabet[rng.below(kAlphabet.size())];
  return s;
}

InspectionOrder random_order(Rng& rng) {
  InspectionOrder o;
  o.order_id = token(rng);
  o.component_serial = token(rng);
  o.component_type = mint_type_id("acme", fmt::format("part{}", rng.below(50)));
  o.procedure_id = token(rng);
  if (rng.below(2) != 0) o.station = mint_instance_id(mint_type_id("acme", "scanner"), token(rng));
  o.due = LogicalClock::at(static_cast<std::int64_t>(rng.below(1'000'000)));
  o.priority = static_cast<unsigned>(rng.below(10));
  return o;
}

ArchiveProbe probe_of(std::map<std::string, std::string> owners) {
  return [owners = std::move(owners)](std::string_view uid) -> std::optional<std::string> {
    auto it = owners.find(std::string(uid));
    if (it == owners.end()) return std::nullopt;
    return it->second;
  };
}

TEST(Gateway, SeedCopiesMappedFieldsVerbatim) {
  InspectionOrder o = make_order("ORD-7");
  o.component_serial = "S-99";
  const auto seed = order_to_archive_work(MappingTable::standard(), o);
  DataObject d(seed);
  EXPECT_EQ(d.text(kOrderId), "ORD-7");
  EXPECT_EQ(d.text(kComponentSerial), "S-99");
  EXPECT_EQ(d.text(kProcedureId), "UT-1");
  EXPECT_EQ(d.text(kComponentType), o.component_type.canonical());
  EXPECT_TRUE(std::is_sorted(seed.begin(), seed.end(),
                             [](const Element& a, const Element& b) { return a.tag < b.tag; }));
  ASSERT_NE(d.find(kOrderExtras), nullptr);
  EXPECT_EQ(seed.size(), 5U);
}

TEST(Gateway, ExtractInvertsTheSeed) {
  Rng rng(1000);
  for (int i = 0; i < 1000; ++i) {
    const InspectionOrder o = random_order(rng);
    const auto seed = order_to_archive_work(MappingTable::standard(), o);
    ASSERT_EQ(extract_order_fields(MappingTable::standard(), seed), order_fields(o)) << i;
  }
}

TEST(Gateway, StrippedTableIsUnmapped) {
  const MappingTable stripped = MappingTable::standard().without("component_serial");
  EXPECT_FALSE(stripped.tag_for("component_serial").has_value());
  EXPECT_EQ(code_of([&] { (void)order_to_archive_work(stripped, make_order("ORD-1")); }), Errc::UnmappedField);
}

TEST(Gateway, MappingMustBeABijection) {
  using E = MappingTable::Entry;
  EXPECT_EQ(code_of([] { MappingTable(1, {E{"order_id", kOrderId}, E{"component_serial", kOrderId}}); }),
            Errc::InvalidMapping);
  EXPECT_EQ(code_of([] { MappingTable(1, {E{"order_id", kOrderId}, E{"order_id", kComponentSerial}}); }),
            Errc::InvalidMapping);
  EXPECT_EQ(code_of([] { MappingTable(1, {E{"colour", kOrderId}}); }), Errc::InvalidMapping);
  EXPECT_EQ(code_of([] { MappingTable(1, {E{"order_id", kObjectUid}}); }), Errc::InvalidMapping);
  const MappingTable& t = MappingTable::standard();
  EXPECT_EQ(t.field_for(kProcedureId), "procedure_id");
  EXPECT_EQ(t.tag_for("order_id"), kOrderId);
  EXPECT_FALSE(t.field_for(kMethod).has_value());
}

TEST(Gateway, MappingTsvRoundTrip) {
  const MappingTable& t = MappingTable::standard();
  const MappingTable back = MappingTable::from_tsv(t.to_tsv());
  EXPECT_EQ(back.version(), t.version());
  EXPECT_EQ(back.entries(), t.entries());
  EXPECT_EQ(t.to_tsv(), read_file(source_dir() / "data" / "mapping-v1.tsv"));
  EXPECT_EQ(code_of([] { (void)MappingTable::from_tsv("#version\t1\norder_id\t00zz\t0001\n"); }), Errc::ParseError);
}

TEST(Gateway, KpiExamples) {
  const ArchiveProbe probe = probe_of({{"u1", "ORD-7"}, {"u2", "ORD-7"}, {"x", "ORD-8"}});
  const VerdictRule rule{50.0, std::nullopt};

  const ReportedValues none = archive_result_to_kpis("ORD-7", {}, {"u1"}, rule, probe);
  EXPECT_EQ(none.verdict, Verdict::Accept);
  EXPECT_EQ(none.indication_count, 0U);
  EXPECT_FALSE(none.max_amplitude.has_value());

  const std::vector<Indication> two = {{0, 0, 42.0F}, {3, 3, 61.0F}};
  const ReportedValues rv = archive_result_to_kpis("ORD-7", two, {"u1", "u2"}, rule, probe);
  EXPECT_EQ(rv.verdict, Verdict::Reject);
  EXPECT_EQ(rv.indication_count, 2U);
  EXPECT_EQ(rv.max_amplitude, 61.0F);
  EXPECT_EQ(rv.archived_refs, (std::vector<std::string>{"u1", "u2"}));

  EXPECT_EQ(code_of([&] { (void)archive_result_to_kpis("ORD-7", two, {"u1", "nope"}, rule, probe); }),
            Errc::DanglingArchiveRef);
  EXPECT_EQ(code_of([&] { (void)archive_result_to_kpis("ORD-7", two, {"x"}, rule, probe); }),
            Errc::DanglingArchiveRef);
  EXPECT_EQ(code_of([&] { (void)archive_result_to_kpis("ORD-7", two, {}, rule, probe); }), Errc::ValidationFailed);
}

TEST(Gateway, KpiMatchesThresholdOracle) {
  Rng rng(61);
  const ArchiveProbe probe = probe_of({{"u", "O"}});
  for (int i = 0; i < 500; ++i) {
    std::vector<Indication> findings(rng.below(6));
    for (auto& f : findings) f.amplitude = static_cast<float>(rng.below(1001)) / 10.0F;
    const double reject = 1.0 + static_cast<double>(rng.below(990)) / 10.0;
    std::optional<double> rework;
    if (rng.below(2) != 0) rework = reject * static_cast<double>(rng.below(100)) / 100.0;
    const ReportedValues rv = archive_result_to_kpis("O", findings, {"u"}, {reject, rework}, probe);

    float peak = -1.0F;
    for (const auto& f : findings) peak = std::max(peak, f.amplitude);
    Verdict expect = Verdict::Accept;
    if (!findings.empty() && peak >= reject) {
      expect = Verdict::Reject;
    } else if (!findings.empty() && rework && peak >= *rework) {
      expect = Verdict::Rework;
    }
    ASSERT_EQ(rv.verdict, expect) << i;
    ASSERT_EQ(rv.indication_count, findings.size());
    ASSERT_EQ(rv.max_amplitude.has_value(), !findings.empty());
    if (!findings.empty()) {
      ASSERT_EQ(*rv.max_amplitude, peak);
    }
  }
}

TEST(Gateway, RouteExamplesAndBoundary) {
  EXPECT_EQ(route(1024, PayloadKind::Workflow), Route::Orders);
  EXPECT_EQ(route(20U * 1024 * 1024, PayloadKind::Workflow), Route::ArchiveWithReference);
  EXPECT_EQ(route(1024, PayloadKind::Bulk), Route::Archive);
  EXPECT_EQ(route(kMaxOrdersPayload, PayloadKind::Workflow), Route::Orders);
  EXPECT_EQ(route(kMaxOrdersPayload + 1, PayloadKind::Workflow), Route::ArchiveWithReference);
  Rng rng(16);
  for (int i = 0; i < 10'000; ++i) {
    const std::uint64_t size = kMaxOrdersPayload - 5000 + rng.below(10'000);
    const Route r = route(size, rng.below(2) != 0 ? PayloadKind::Workflow : PayloadKind::Bulk);
    if (size > kMaxOrdersPayload) {
      ASSERT_NE(r, Route::Orders);
    }
  }
}

}  // namespace
}  // namespace nde4::test
