/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <set>
#include <tuple>

#include <fmt/format.h>
#include <unistd.h>

#include "nde4/gateway.hpp"
#include "nde4/orders_bus.hpp"
#include "nde4/semantics.hpp"
#include "nde4/sovereignty.hpp"

#ifndef NDE4_SOURCE_DIR
#error "NDE4_SOURCE_DIR must point at the repository root"
#endif

namespace nde4::test {

namespace fs = std::filesystem;

TempDir::TempDir(std::string_view label) {
  static std::atomic<unsigned> counter{0};
  path_ = fs::temp_directory_path() /
          fmt::format("nde4-{}-{}-{}", label, static_cast<long>(::getpid()), counter.fetch_add(1));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path source_dir() { return NDE4_SOURCE_DIR; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Bytes read_bytes(const fs::path& path) { return to_bytes(read_file(path)); }

DataObject make_object(std::string uid, std::string order_id, std::string serial, std::string method) {
  DataObject obj;
  obj.set_text(tags::kObjectUid, uid);
  obj.set_text(tags::kMethod, method);
  obj.set_text(tags::kComponentSerial, serial);
  obj.set_text(tags::kOrderId, order_id);
  return obj;
}

InspectionOrder make_order(std::string order_id, unsigned priority, std::int64_t due_tick, std::string procedure_id) {
  InspectionOrder o;
  o.order_id = std::move(order_id);
  o.component_serial = "SER-1";
  o.component_type = mint_type_id("acme", "bracket");
  o.procedure_id = std::move(procedure_id);
  o.due = LogicalClock::at(due_tick);
  o.priority = priority;
  return o;
}

Manifest station_manifest(const InstanceId& id, const std::vector<std::string>& methods) {
  Manifest m;
  m.shell_type_id = id.type_id();
  m.asset_instance_id = id;
  m.display_name = id.serial();
  for (const auto& method : methods) {
    m.services.push_back({inspection_service_name(method), {tags::kOrderId}, {tags::kAmplitudeGrid}});
  }
  return m;
}

// --- generators ---------------------------------------------------------------------

DataObject random_object(Rng& rng, std::size_t max_value) {
  std::set<TagCode> codes;
  const std::size_t n = rng.below(12);
  while (codes.size() < n) {
    codes.insert({static_cast<std::uint16_t>(rng.below(0x10000)), static_cast<std::uint16_t>(rng.below(0x10000))});
  }
  std::vector<Element> elements;
  for (const auto& code : codes) {
    Bytes value(rng.below(max_value + 1));
    for (auto& b : value) b = static_cast<std::uint8_t>(rng.next());
    elements.push_back({code, std::move(value)});
  }
  return DataObject(std::move(elements));
}

Frame random_frame(Rng& rng, std::size_t max_payload) {
  Frame f;
  f.channel = static_cast<Channel>(1 + rng.below(3));
  f.payload.resize(rng.below(max_payload + 1));
  for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng.next());
  return f;
}

std::vector<std::vector<float>> random_grid(Rng& rng, std::size_t rows, std::size_t cols, double density) {
  std::vector<std::vector<float>> grid(rows, std::vector<float>(cols));
  for (auto& row : grid) {
    for (auto& cell : row) {
      // Quantized so ties between peaks actually occur.
      cell = rng.uniform() < density ? static_cast<float>(20 + rng.below(8) * 10) : static_cast<float>(rng.below(20));
    }
  }
  return grid;
}

DataObject grid_object(const std::vector<std::vector<float>>& grid) {
  DataObject obj = make_object("grid", "ORD-G");
  const auto rows = static_cast<std::uint16_t>(grid.size());
  const auto cols = static_cast<std::uint16_t>(grid.empty() ? 0 : grid[0].size());
  std::vector<float> flat;
  for (const auto& row : grid) flat.insert(flat.end(), row.begin(), row.end());
  obj.set(tags::kRows, encode_value({ValueRep::U16, rows}));
  obj.set(tags::kCols, encode_value({ValueRep::U16, cols}));
  obj.set(tags::kAmplitudeGrid, encode_value({ValueRep::F32ARRAY, flat}));
  return obj;
}

CellSet random_cells(Rng& rng, double density) {
  CellSet out;
  for (auto l : kLayers) {
    for (auto lc : kLifecycles) {
      for (auto h : kHierarchies) {
        if (rng.uniform() < density) out.insert({l, lc, h});
      }
    }
  }
  return out;
}

// --- oracles ------------------------------------------------------------------------

std::vector<Indication> oracle_indications(const std::vector<std::vector<float>>& grid, double floor) {
  const std::size_t rows = grid.size();
  const std::size_t cols = rows == 0 ? 0 : grid[0].size();
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> label(rows * cols, kNone);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    if (static_cast<double>(grid[i / cols][i % cols]) >= floor) label[i] = i;
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < rows * cols; ++i) {
      if (label[i] == kNone) continue;
      const std::size_t r = i / cols;
      const std::size_t c = i % cols;
      std::vector<std::size_t> nbrs;
      if (r > 0) nbrs.push_back(i - cols);
      if (r + 1 < rows) nbrs.push_back(i + cols);
      if (c > 0) nbrs.push_back(i - 1);
      if (c + 1 < cols) nbrs.push_back(i + 1);
      for (std::size_t n : nbrs) {
        if (label[n] != kNone && label[n] < label[i]) {
          label[i] = label[n];
          changed = true;
        }
      }
    }
  }
  std::map<std::size_t, std::size_t> peak;  // label -> cell
  for (std::size_t i = 0; i < rows * cols; ++i) {
    if (label[i] == kNone) continue;
    auto [it, fresh] = peak.try_emplace(label[i], i);
    const float cur = grid[it->second / cols][it->second % cols];
    if (!fresh && grid[i / cols][i % cols] > cur) it->second = i;
  }
  std::vector<Indication> out;
  for (const auto& [lab, cell] : peak) {
    out.push_back({static_cast<std::uint16_t>(cell / cols), static_cast<std::uint16_t>(cell % cols),
                   grid[cell / cols][cell % cols]});
  }
  return out;
}

std::vector<std::string> oracle_worklist(std::vector<InspectionOrder> orders) {
  std::vector<std::tuple<long long, std::int64_t, std::string>> keys;
  for (const auto& o : orders) keys.emplace_back(-static_cast<long long>(o.priority), o.due.to_epoch_seconds(), o.order_id);
  std::sort(keys.begin(), keys.end());
  std::vector<std::string> ids;
  for (const auto& k : keys) ids.push_back(std::get<2>(k));
  return ids;
}

std::vector<std::string> oracle_query(const fs::path& store, const QueryCriteria& c) {
  // chain.log record: uid length u8, index u64, uid, two digests, DATETIME, own digest.
  const Bytes log = read_bytes(store / "chain.log");
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < log.size()) {
    const std::size_t len = log[pos];
    const std::string uid(log.begin() + static_cast<std::ptrdiff_t>(pos + 9),
                          log.begin() + static_cast<std::ptrdiff_t>(pos + 9 + len));
    pos += 1 + 8 + len + 32 + 32 + kDateTimeSize + 32;
    const DataObject obj = decode_object(read_bytes(store / (uid + ".ndeo")));
    auto field = [&](TagCode tag) { return obj.text(tag); };
    if (c.order_id && field(tags::kOrderId) != *c.order_id) continue;
    if (c.component_serial && field(tags::kComponentSerial) != *c.component_serial) continue;
    if (c.method && field(tags::kMethod) != *c.method) continue;
    out.push_back(uid);
  }
  return out;
}

CellSet oracle_gaps(const CellSet& required, const std::vector<ComponentLocus>& loci) {
  CellSet gaps;
  for (auto l : kLayers) {
    for (auto lc : kLifecycles) {
      for (auto h : kHierarchies) {
        const RamiCoordinate cell{l, lc, h};
        if (required.count(cell) == 0) continue;
        bool covered = false;
        for (const auto& locus : loci) covered = covered || locus.cells.count(cell) != 0;
        if (!covered) gaps.insert(cell);
      }
    }
  }
  return gaps;
}

// --- negative paths -----------------------------------------------------------------

namespace {

/// Registry with one UT station, an archive holding obj-1 for ORD-1, and a bus.
struct BusWorld {
  TempDir dir{"bus"};
  LogicalClock clock;
  Archive archive{dir / "store", Dictionary::standard(), &clock};
  TwinRegistry registry;
  ProcedureCatalog procedures;
  InstanceId station = mint_instance_id(mint_type_id("acme", "ut-scanner"), "s1");
  std::unique_ptr<OrdersBus> bus;

  BusWorld() {
    registry.register_shell(station_manifest(station, {"UT"}));
    Procedure p;
    p.procedure_id = "UT-1";
    p.rows = 4;
    p.cols = 4;
    procedures.add(p);
    archive.store(make_object("obj-1", "ORD-1"));
    bus = std::make_unique<OrdersBus>(registry, procedures, archive.probe(), &clock);
  }

  void to_archived(const std::string& id) {
    bus->submit_order(make_order(id));
    bus->assign(id, station);
    bus->publish_status({id, OrderState::InProgress, {}, 0});
    bus->publish_status({id, OrderState::DataArchived, {}, 0});
  }
};

/// Provider, consumer and third-party connectors, all mutually connected.
struct SovWorld {
  TempDir dir{"sov"};
  LogicalClock clock;
  Archive archive{dir / "store", Dictionary::standard(), &clock};
  InstanceId a = mint_instance_id(mint_type_id("alpha", "connector"), "main");
  InstanceId b = mint_instance_id(mint_type_id("beta", "connector"), "main");
  InstanceId c = mint_instance_id(mint_type_id("gamma", "connector"), "main");
  std::unique_ptr<Connector> pa;
  std::unique_ptr<Connector> pb;
  std::unique_ptr<Connector> pc;

  explicit SovWorld(std::optional<std::set<InstanceId>> allow = std::nullopt) {
    archive.store(make_object("obj-1", "ORD-1"));
    pa = std::make_unique<Connector>(a, &archive, &clock, fs::path{}, allow);
    pb = std::make_unique<Connector>(b, nullptr, &clock, fs::path{}, allow);
    pc = std::make_unique<Connector>(c, nullptr, &clock, fs::path{}, allow);
    for (Connector* x : {pa.get(), pb.get(), pc.get()}) {
      for (Connector* y : {pa.get(), pb.get(), pc.get()}) {
        if (x != y) x->connect(y->id(), loopback_link([y](const Frame& f) { return y->handle(f); }));
      }
    }
  }

  std::string active(UsagePolicy p = {}) {
    const std::string cid = pa->offer(b, "obj-1", p);
    pb->accept(cid);
    return cid;
  }
};

ScenarioConfig demo_config() { return load_scenario(source_dir() / "scenarios" / "demo.scen"); }

Bytes good_frame() { return encode_frame(Channel::Archive, to_bytes("abc")); }

}  // namespace

std::vector<NegativeCase> negative_cases() {
  using E = Errc;
  std::vector<NegativeCase> v;
  auto add = [&](std::string op, Errc e, std::function<void()> fn) { v.push_back({std::move(op), e, std::move(fn)}); };

  // identity
  add("mint_type_id: illegal character", E::MalformedToken, [] { (void)mint_type_id("acme", "Drill"); });
  add("mint_type_id: empty", E::MalformedToken, [] { (void)mint_type_id("", "drill"); });
  add("mint_type_id: overlong", E::MalformedToken, [] { (void)mint_type_id("acme", std::string(65, 'a')); });
  add("mint_instance_id", E::MalformedToken,
      [] { (void)mint_instance_id(mint_type_id("acme", "drill"), "no spaces"); });
  add("parse_id", E::ParseError, [] { (void)parse_id("urn:nde4:type:acme"); });

  // twin registry
  add("register_shell: duplicate", E::DuplicateInstance, [] {
    TwinRegistry r;
    const auto id = mint_instance_id(mint_type_id("acme", "drill"), "25");
    r.register_shell(station_manifest(id, {}));
    r.register_shell(station_manifest(id, {}));
  });
  add("register_shell: invalid", E::InvalidManifest, [] {
    TwinRegistry r;
    Manifest m;
    m.shell_type_id = mint_type_id("acme", "drill");
    r.register_shell(m);
  });
  add("register_shell: cycle through children", E::CycleDetected, [] {
    TwinRegistry r;
    const auto p = mint_instance_id(mint_type_id("acme", "plant"), "p");
    const auto q = mint_instance_id(mint_type_id("acme", "cell"), "q");
    Manifest mp = station_manifest(p, {});
    mp.children = {q};
    r.register_shell(mp);
    Manifest mq = station_manifest(q, {});
    mq.children = {p};
    r.register_shell(mq);
  });
  add("nest: cycle", E::CycleDetected, [] {
    TwinRegistry r;
    const auto p = mint_instance_id(mint_type_id("acme", "plant"), "p");
    const auto q = mint_instance_id(mint_type_id("acme", "cell"), "q");
    r.register_shell(station_manifest(p, {}));
    r.register_shell(station_manifest(q, {}));
    r.nest(p, q);
    r.nest(q, p);
  });
  add("nest: unknown", E::UnknownShell, [] {
    TwinRegistry r;
    const auto p = mint_instance_id(mint_type_id("acme", "plant"), "p");
    r.register_shell(station_manifest(p, {}));
    r.nest(p, mint_instance_id(mint_type_id("acme", "cell"), "ghost"));
  });
  add("resolve", E::UnknownShell,
      [] { (void)TwinRegistry{}.resolve(mint_instance_id(mint_type_id("acme", "cell"), "ghost")); });
  add("manifest_from_json", E::ParseError, [] { (void)manifest_from_json("{\"header\": "); });

  // semantics
  add("lookup", E::UnknownStandardTag, [] { (void)lookup(Dictionary::standard(), TagCode{0x0020, 0x00FF}); });
  add("interpret: length", E::LengthMismatch,
      [] { (void)interpret(*Dictionary::standard().find(tags::kRows), Bytes{1, 2, 3}); });
  add("interpret: utf-8", E::EncodingError,
      [] { (void)interpret(*Dictionary::standard().find(tags::kOrderId), Bytes{0xC3, 0x28}); });
  add("interpret: datetime digits", E::EncodingError,
      [] { (void)interpret(*Dictionary::standard().find(tags::kCreated), to_bytes("2020AB01T000000")); });
  add("Dictionary: conflict", E::DictionaryConflict, [] {
    (void)Dictionary::standard().extend({{tags::kOrderId, "again", ValueRep::TEXT, std::nullopt, Multiplicity::One}});
  });
  add("Dictionary::from_tsv", E::ParseError, [] { (void)Dictionary::from_tsv("#version\t1\nzz,01\tx\tTEXT\t-\t1\n"); });

  // orders bus
  add("submit_order: duplicate", E::DuplicateOrder, [] {
    BusWorld w;
    w.bus->submit_order(make_order("ORD-1"));
    w.bus->submit_order(make_order("ORD-1"));
  });
  add("submit_order: invalid", E::ValidationFailed, [] { BusWorld().bus->submit_order(make_order("")); });
  add("poll_worklist", E::UnknownStation, [] {
    (void)BusWorld().bus->poll_worklist(mint_instance_id(mint_type_id("acme", "ut-scanner"), "ghost"));
  });
  add("publish_status: illegal", E::IllegalTransition, [] {
    BusWorld w;
    w.to_archived("ORD-1");
    w.bus->publish_status({"ORD-1", OrderState::InProgress, {}, 0});
  });
  add("publish_status: unknown", E::UnknownOrder,
      [] { BusWorld().bus->publish_status({"ORD-9", OrderState::Assigned, {}, 0}); });
  add("report_values: state", E::WrongState, [] {
    BusWorld w;
    w.bus->submit_order(make_order("ORD-1"));
    w.bus->report_values({"ORD-1", Verdict::Accept, 0, std::nullopt, {"obj-1"}});
  });
  add("report_values: unknown", E::UnknownOrder,
      [] { BusWorld().bus->report_values({"ORD-9", Verdict::Accept, 0, std::nullopt, {"obj-1"}}); });
  add("report_values: dangling", E::DanglingArchiveRef, [] {
    BusWorld w;
    w.to_archived("ORD-1");
    w.bus->report_values({"ORD-1", Verdict::Accept, 0, std::nullopt, {"obj-missing"}});
  });
  add("report_values: invalid", E::ValidationFailed, [] {
    BusWorld w;
    w.to_archived("ORD-1");
    w.bus->report_values({"ORD-1", Verdict::Reject, 0, std::nullopt, {"obj-1"}});
  });
  add("encode_frame", E::OversizedPayload,
      [] { (void)encode_frame(Channel::Orders, Bytes(kMaxOrdersPayload + 1)); });
  add("decode_frame: magic", E::BadMagic, [] {
    Bytes b = good_frame();
    b[0] = 'X';
    (void)decode_frame(b);
  });
  add("decode_frame: version", E::BadVersion, [] {
    Bytes b = good_frame();
    b[4] = 2;
    (void)decode_frame(b);
  });
  add("decode_frame: channel", E::BadChannel, [] {
    Bytes b = good_frame();
    b[5] = 9;
    (void)decode_frame(b);
  });
  add("decode_frame: length", E::LengthMismatch, [] {
    Bytes b = good_frame();
    b.pop_back();
    (void)decode_frame(b);
  });
  add("decode_frame: oversized", E::OversizedPayload, [] {
    Bytes b = {'N', 'D', 'E', '4', 1, 1};
    put_u32le(b, static_cast<std::uint32_t>(kMaxOrdersPayload + 1));
    (void)decode_frame(b);
  });
  add("decode_message", E::ParseError, [] { (void)decode_message(to_bytes("{\"kind\": \"order\",")); });

  // archive
  add("decode_object: order", E::NonCanonicalOrder, [] {
    Bytes b = to_bytes("NDEO");
    b.push_back(1);
    for (std::uint16_t g : {0x0020, 0x0010}) {
      put_u16le(b, g);
      put_u16le(b, 1);
      put_u32le(b, 0);
    }
    (void)decode_object(b);
  });
  add("decode_object: truncated", E::TruncatedElement, [] {
    Bytes b = encode_object(make_object("obj-1", "ORD-1"));
    b.resize(b.size() - 2);
    (void)decode_object(b);
  });
  add("decode_object: preamble", E::BadPreamble, [] { (void)decode_object(to_bytes("DICM\x01")); });
  add("store: invalid", E::ValidationFailed, [] {
    TempDir d("a");
    Archive a(d / "s");
    DataObject o;
    o.set_text(tags::kObjectUid, "obj-1");
    a.store(o);
  });
  add("store: duplicate", E::DuplicateUID, [] {
    TempDir d("a");
    Archive a(d / "s");
    a.store(make_object("obj-1", "ORD-1"));
    a.store(make_object("obj-1", "ORD-2"));
  });
  add("fetch", E::UnknownUID, [] {
    TempDir d("a");
    (void)Archive(d / "s").fetch("obj-9");
  });
  add("Archive: unusable directory", E::IoError, [] {
    TempDir d("a");
    std::ofstream(d / "file") << "x";
    Archive a(d / "file" / "store");
  });

  // gateway
  add("order_to_archive_work", E::UnmappedField, [] {
    (void)order_to_archive_work(MappingTable::standard().without("procedure_id"), make_order("ORD-1"));
  });
  add("MappingTable", E::InvalidMapping,
      [] { MappingTable(1, {{"order_id", tags::kOrderId}, {"component_serial", tags::kOrderId}}); });
  add("archive_result_to_kpis", E::DanglingArchiveRef, [] {
    const ArchiveProbe none = [](std::string_view) { return std::optional<std::string>(); };
    (void)archive_result_to_kpis("ORD-1", {}, {"obj-1"}, VerdictRule{}, none);
  });

  // sovereignty
  add("offer: uid", E::UnknownUID, [] {
    SovWorld w;
    w.pa->offer(w.b, "obj-9", {});
  });
  add("offer: policy", E::InvalidPolicy, [] {
    SovWorld w;
    UsagePolicy p;
    p.max_reads = 0;
    w.pa->offer(w.b, "obj-1", p);
  });
  add("offer: uncertified", E::UncertifiedConnector, [] {
    SovWorld probe;
    SovWorld w(std::set<InstanceId>{probe.a});
    w.pa->offer(w.b, "obj-1", {});
  });
  add("accept: unknown", E::UnknownContract, [] {
    SovWorld w;
    w.pb->accept(w.a.canonical() + "#42");
  });
  add("accept: consumer", E::WrongConsumer, [] {
    SovWorld w;
    const std::string cid = w.pa->offer(w.b, "obj-1", {});
    w.pc->accept(cid);
  });
  add("accept: state", E::WrongState, [] {
    SovWorld w;
    w.pb->accept(w.active());
  });
  add("consume: exhausted", E::PolicyExhausted, [] {
    SovWorld w;
    const std::string cid = w.active();
    (void)w.pb->consume(cid);
    (void)w.pb->consume(cid);
  });
  add("consume: expired", E::PolicyExpired, [] {
    SovWorld w;
    UsagePolicy p;
    p.expires = LogicalClock::at(10);
    const std::string cid = w.active(p);
    w.clock.advance_to(10);
    (void)w.pb->consume(cid);
  });
  add("consume: unknown", E::UnknownContract, [] {
    SovWorld w;
    (void)w.pb->consume(w.a.canonical() + "#7");
  });
  add("forward: prohibited", E::ForwardProhibited, [] {
    SovWorld w;
    UsagePolicy p;
    p.max_reads = 3;
    w.pb->forward(w.active(p), w.c, p);
  });
  add("forward: state", E::WrongState, [] {
    SovWorld w;
    UsagePolicy p;
    p.allow_forward = true;
    const std::string cid = w.active(p);
    (void)w.pb->consume(cid);
    w.pb->forward(cid, w.c, p);
  });
  add("parse_audit_event", E::ParseError, [] { (void)parse_audit_event("20200101T000000\tno-action-field"); });

  // rami
  add("locate", E::UnknownComponent, [] { (void)LociRegistry::standard().locate("flux-capacitor"); });
  add("expand_cells", E::ParseError, [] { (void)expand_cells("INFORMATION/INST_USE"); });

  // plantsim
  add("run_scenario: config", E::ConfigInvalid, [] {
    ScenarioConfig cfg = demo_config();
    cfg.name.clear();
    TempDir d("sim");
    (void)run_scenario(cfg, d.path());
  });
  add("run_scenario: deadlock", E::ScenarioDeadlock, [] {
    TempDir d("sim");
    (void)run_scenario(load_scenario(source_dir() / "scenarios" / "nosov-chain.scen"), d.path());
  });
  add("evaluate", E::GridShapeMismatch, [] {
    Procedure p;
    p.procedure_id = "UT-1";
    p.rows = 3;
    p.cols = 3;
    (void)evaluate(grid_object({{1.0F, 2.0F}, {3.0F, 4.0F}}), p);
  });
  add("inject_fault", E::FaultNotApplicable, [] {
    ScenarioConfig cfg = demo_config();
    cfg.sovereignty = false;
    (void)inject_fault(cfg, Fault::PolicyOverread);
  });
  add("parse_scenario", E::ParseError, [] { (void)parse_scenario("{\"name\": \"x\", "); });
  return v;
}

std::string check_negative_case(const NegativeCase& c) {
  try {
    c.trigger();
  } catch (const Error& e) {
    if (e.code() == c.expected) return {};
    return fmt::format("expected {}, got {}", to_string(c.expected), e.what());
  } catch (const std::exception& e) {
    return fmt::format("expected {}, got foreign exception: {}", to_string(c.expected), e.what());
  }
  return fmt::format("expected {}, nothing thrown", to_string(c.expected));
}

}  // namespace nde4::test
