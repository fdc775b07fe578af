/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "nde4/plantsim.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <memory>
#include <queue>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nde4/archive.hpp"
#include "nde4/frame.hpp"
#include "nde4/gateway.hpp"
#include "nde4/orders_bus.hpp"
#include "nde4/registry.hpp"

namespace nde4 {

namespace fs = std::filesystem;

std::string TraceEvent::str() const {
  return fmt::format("{}\t{}\t{}\t{}\t{}", seq, at.str(), actor, kind, summary);
}

std::string ScenarioResult::trace_text() const {
  std::string out;
  for (const auto& e : trace) {
    out += e.str();
    out += '\n';
  }
  return out;
}

bool RunReport::has_findings() const noexcept {
  return !rami_gaps.empty() || audit_denies != 0 || !chain_ok || deadlock.has_value();
}

std::string RunReport::to_json() const {
  nlohmann::json j = {
      {"scenario", scenario},
      {"seed", seed},
      {"orders_total", orders_total},
      {"reported", reported},
      {"rejected", rejected},
      {"verdicts", verdicts},
      {"chain_status", chain_status},
      {"archives", nlohmann::json::object()},
      {"rami_gaps", rami_gaps},
      {"audit_denies", audit_denies},
      {"exchanges", {{"total", exchanges_total}, {"completed", exchanges_completed}}},
      {"references", references},
      {"max_orders_payload", max_orders_payload},
      {"faults", faults},
      {"deadlock", deadlock ? nlohmann::json(*deadlock) : nlohmann::json(nullptr)},
  };
  for (const auto& [name, status] : archives) {
    j["archives"][name] = {{"chain", status}, {"objects", objects.count(name) != 0 ? objects.at(name) : 0}};
  }
  return j.dump(2) + "\n";
}

namespace {

// Ticks between pipeline steps; one tick is one logical second.
constexpr LogicalClock::Tick kStep = 1;
constexpr LogicalClock::Tick kAcquireTime = 2;
constexpr std::size_t kOversizeDocument = 17U * 1024U * 1024U;

std::string one_line(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return s;
}

struct Station {
  const StationSpec* spec = nullptr;
  InstanceId id;
  bool busy = false;
};

struct Company {
  const CompanySpec* spec = nullptr;
  InstanceId plant;
  InstanceId connector_id;
  std::vector<Station> stations;
  ProcedureCatalog procedures;
  std::unique_ptr<Archive> archive;
  std::unique_ptr<OrdersBus> bus;
  std::unique_ptr<OrdersClient> orders;
  std::unique_ptr<ArchiveClient> archive_client;
  std::unique_ptr<Connector> connector;
  Subscription status;
};

struct OrderRun {
  const OrderSpec* spec = nullptr;
  Company* company = nullptr;
  const Procedure* procedure = nullptr;
  InspectionOrder order;
  Station* station = nullptr;
  std::vector<Element> seed;
  std::vector<DataObject> objects;
  std::vector<std::string> uids;
  std::vector<Indication> findings;
  std::optional<ReportedValues> kpis;
  std::string blocked;
};

struct ExchangeRun {
  const ExchangeSpec* spec = nullptr;
  bool done = false;
  std::string failure = "source order not reported";
};

struct Event {
  LogicalClock::Tick tick;
  std::string actor;
  std::uint64_t seq;
  std::function<void()> run;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    if (a.tick != b.tick) return a.tick > b.tick;
    if (a.actor != b.actor) return a.actor > b.actor;
    return a.seq > b.seq;
  }
};

class Simulation {
 public:
  Simulation(const ScenarioConfig& cfg, const fs::path& out) : cfg_(cfg), out_(out), rng_(cfg.seed) {}

  ScenarioResult run();

 private:
  void setup();
  void register_shells(Company& co);
  void connect_all();

  void schedule(LogicalClock::Tick at, std::string actor, std::function<void()> fn) {
    queue_.push({at, std::move(actor), next_event_++, std::move(fn)});
  }
  void after(LogicalClock::Tick dt, std::string actor, std::function<void()> fn) {
    schedule(clock_.tick() + dt, std::move(actor), std::move(fn));
  }
  void trace(std::string actor, std::string kind, std::string summary) {
    result_.trace.push_back({result_.trace.size(), clock_.now(), std::move(actor), std::move(kind),
                             one_line(std::move(summary))});
  }
  void drain_status();

  std::string mint_uid() { return fmt::format("obj-{:016x}", splitmix64(cfg_.seed ^ (0xA5A5ULL + uid_counter_++))); }
  bool has_fault(Fault f) const { return std::find(cfg_.faults.begin(), cfg_.faults.end(), f) != cfg_.faults.end(); }
  bool needs_met(const OrderRun& r) const;
  void wake_stations(Company& co);
  void wake_all();

  void submit(OrderRun& r);
  void route_oversize(OrderRun& r);
  void poll(Company& co, Station& st);
  void setup_device(OrderRun& r);
  void acquire_data(OrderRun& r);
  void evaluate_data(OrderRun& r);
  void store(OrderRun& r);
  void translate(OrderRun& r);
  void report(OrderRun& r);
  void exchange(ExchangeRun& ex);

  void tamper();
  void finish();

  const ScenarioConfig& cfg_;
  fs::path out_;
  Rng rng_;
  LogicalClock clock_;
  TwinRegistry registry_;
  std::map<std::string, Company> companies_;
  std::vector<std::unique_ptr<OrderRun>> runs_;
  std::map<std::string, OrderRun*, std::less<>> by_order_;
  std::vector<ExchangeRun> exchanges_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_event_ = 0;
  std::uint64_t uid_counter_ = 0;
  ScenarioResult result_;
};

void Simulation::setup() {
  const fs::path archive_root = out_ / "archive";
  const fs::path audit_root = out_ / "audit";
  for (const auto& spec : cfg_.companies) {
    const fs::path dir = archive_root / spec.name;
    std::error_code ec;
    if (fs::exists(dir / "chain.log", ec)) {
      throw Error(Errc::ConfigInvalid, fmt::format("{} already holds an archive; use a fresh output directory",
                                                   dir.string()));
    }
  }

  std::optional<std::set<InstanceId>> allow;
  if (cfg_.allowlist) {
    allow.emplace();
    for (const auto& n : *cfg_.allowlist) allow->insert(mint_instance_id(mint_type_id(n, "connector"), "main"));
  }

  for (const auto& spec : cfg_.companies) {
    Company& co = companies_[spec.name];
    co.spec = &spec;
    co.plant = mint_instance_id(mint_type_id(spec.name, "plant"), "main");
    co.connector_id = mint_instance_id(mint_type_id(spec.name, "connector"), "main");
    for (const auto& st : spec.stations) {
      co.stations.push_back({&st, mint_instance_id(mint_type_id(spec.name, st.type), st.serial), false});
    }
    for (const auto& p : spec.procedures) co.procedures.add(p);

    co.archive = std::make_unique<Archive>(archive_root / spec.name, Dictionary::standard(), &clock_);
    result_.archive_dirs[spec.name] = co.archive->dir();
    co.bus = std::make_unique<OrdersBus>(registry_, co.procedures, co.archive->probe(), &clock_);
    co.status = co.bus->subscribe(std::string(kWildcardTopic));

    // Every ORDERS frame crosses this tap; none may exceed the channel cap.
    FrameTap tap = [this](const Frame& f, ByteView) {
      if (f.channel != Channel::Orders) return;
      result_.report.max_orders_payload = std::max<std::uint64_t>(result_.report.max_orders_payload, f.payload.size());
    };
    OrdersBus* bus = co.bus.get();
    Archive* archive = co.archive.get();
    co.orders = std::make_unique<OrdersClient>(
        loopback_link([bus](const Frame& f) { return handle_orders_frame(*bus, f); }, tap));
    co.archive_client = std::make_unique<ArchiveClient>(
        loopback_link([archive](const Frame& f) { return handle_archive_frame(*archive, f); }));
    if (cfg_.sovereignty) {
      co.connector = std::make_unique<Connector>(co.connector_id, co.archive.get(), &clock_, audit_root, allow);
      result_.audit_logs[spec.name] = co.connector->audit_path();
      std::error_code ec;
      if (fs::exists(co.connector->audit_path(), ec)) {
        throw Error(Errc::ConfigInvalid, fmt::format("{} already exists; use a fresh output directory",
                                                     co.connector->audit_path().string()));
      }
    }
    register_shells(co);
  }
  if (cfg_.sovereignty) connect_all();

  for (const auto& o : cfg_.orders) {
    auto run = std::make_unique<OrderRun>();
    run->spec = &o;
    run->company = &companies_.at(o.company);
    run->procedure = run->company->procedures.find(o.procedure_id);
    InspectionOrder& io = run->order;
    io.order_id = o.order_id;
    io.component_serial = o.component_serial;
    io.component_type = mint_type_id(o.company, o.component_type);
    io.procedure_id = o.procedure_id;
    if (o.station) {
      for (const auto& st : run->company->stations) {
        if (st.spec->serial == *o.station) io.station = st.id;
      }
    }
    io.due = LogicalClock::at(o.release + o.due_in);
    io.priority = o.priority;
    by_order_[o.order_id] = run.get();
    runs_.push_back(std::move(run));
  }
  for (const auto& ex : cfg_.exchanges) exchanges_.push_back({&ex});
}

void Simulation::register_shells(Company& co) {
  // The plant lists its stations before they exist; registration order is
  // deliberately parent-first.
  Manifest plant;
  plant.shell_type_id = co.plant.type_id();
  plant.asset_instance_id = co.plant;
  plant.display_name = fmt::format("{} plant ({})", co.spec->name, to_string(co.spec->role));
  for (const auto& st : co.stations) plant.children.push_back(st.id);
  plant.data_refs.push_back({tags::kOrderId, fmt::format("orders:{}", co.spec->name)});
  ShellHandle h = registry_.register_shell(plant);
  trace(co.plant.canonical(), "register",
        fmt::format("{} children, {} finding(s)", plant.children.size(), h.report.findings().size()));

  for (const auto& st : co.stations) {
    Manifest m;
    m.shell_type_id = st.id.type_id();
    m.asset_instance_id = st.id;
    m.display_name = st.spec->person ? fmt::format("inspector {}", st.spec->serial)
                                     : fmt::format("inspection system {}", st.spec->serial);
    m.data_refs.push_back({tags::kAmplitudeGrid, fmt::format("archive:{}", co.spec->name)});
    for (const auto& method : st.spec->methods) {
      m.services.push_back({inspection_service_name(method), {tags::kOrderId, tags::kProcedureId},
                            {tags::kAmplitudeGrid}});
    }
    registry_.register_shell(m);
    trace(st.id.canonical(), "register", fmt::format("{} methods [{}]", st.spec->person ? "person" : "machine",
                                                     fmt::join(st.spec->methods, ",")));
  }

  if (co.connector) {
    Manifest m;
    m.shell_type_id = co.connector_id.type_id();
    m.asset_instance_id = co.connector_id;
    m.display_name = fmt::format("{} data connector", co.spec->name);
    m.services.push_back({"offer", {tags::kObjectUid}, {}});
    m.services.push_back({"consume", {}, {tags::kObjectUid}});
    registry_.register_shell(m);
    registry_.nest(co.plant, co.connector_id);
    trace(co.connector_id.canonical(), "register", "connector nested under plant");
  }
}

void Simulation::connect_all() {
  for (auto& [a_name, a] : companies_) {
    for (auto& [b_name, b] : companies_) {
      if (a_name == b_name) continue;
      Connector* peer = b.connector.get();
      a.connector->connect(b.connector_id, loopback_link([peer](const Frame& f) { return peer->handle(f); }));
    }
  }
}

void Simulation::drain_status() {
  for (auto& [name, co] : companies_) {
    for (const auto& e : co.status.drain()) {
      trace(fmt::format("bus:{}", name), "status", fmt::format("{} {} seq={}", e.order_id, to_string(e.state), e.seq));
    }
  }
}

bool Simulation::needs_met(const OrderRun& r) const {
  for (const auto& n : r.spec->needs) {
    auto it = std::find_if(exchanges_.begin(), exchanges_.end(), [&](const ExchangeRun& e) { return e.spec->id == n; });
    if (it == exchanges_.end() || !it->done) return false;
  }
  return true;
}

void Simulation::wake_stations(Company& co) {
  for (auto& st : co.stations) {
    if (!st.busy) after(kStep, st.id.canonical(), [this, &co, &st] { poll(co, st); });
  }
}

void Simulation::wake_all() {
  for (auto& [name, co] : companies_) wake_stations(co);
}

void Simulation::submit(OrderRun& r) {
  Company& co = *r.company;
  const Ack ack = co.orders->submit(r.order);
  trace(fmt::format("mes:{}", co.spec->name), "submit",
        fmt::format("{} serial={} procedure={} priority={} ({})", r.order.order_id, r.order.component_serial,
                    r.order.procedure_id, r.order.priority, ack.detail));
  if (has_fault(Fault::OversizeWorkflowMsg) && &r == runs_.front().get()) route_oversize(r);
  wake_stations(co);
}

// The MES attaches a workflow document larger than the ORDERS channel can
// carry; the gateway archives it and sends a reference instead.
void Simulation::route_oversize(OrderRun& r) {
  Company& co = *r.company;
  const std::string actor = fmt::format("gateway:{}", co.spec->name);
  Bytes doc(kOversizeDocument);
  Rng fill = Rng::stream(cfg_.seed, "workflow-document");
  for (std::size_t i = 0; i < doc.size(); i += 8) {
    const std::uint64_t w = fill.next();
    for (std::size_t k = 0; k < 8 && i + k < doc.size(); ++k) doc[i + k] = static_cast<std::uint8_t>(w >> (8 * k));
  }
  try {
    (void)encode_frame(Channel::Orders, doc);
    trace(actor, "route", "unexpected: oversized document accepted on ORDERS");
  } catch (const Error& e) {
    trace(actor, "route", fmt::format("workflow document {} B refused on ORDERS: {}", doc.size(), to_string(e.code())));
  }
  const Route decision = route(doc.size(), PayloadKind::Workflow);
  if (has_fault(Fault::DropGateway)) {
    trace(actor, "route-blocked", "gateway unavailable");
    return;
  }
  DataObject obj;
  obj.merge(order_to_archive_work(MappingTable::standard(), r.order));
  const std::string uid = mint_uid();
  obj.set_text(tags::kObjectUid, uid);
  obj.set_text(tags::kCreated, clock_.now().str());
  obj.set_text(tags::kMethod, r.procedure->method);
  obj.set(tags::kBulkPayload, std::move(doc));
  co.archive_client->store(obj);
  const ReferenceMessage ref{r.order.order_id, uid, kOversizeDocument};
  co.orders->reference(ref);
  ++result_.report.references;
  trace(actor, "route", fmt::format("{} {} uid={} size={}", r.order.order_id, to_string(decision), uid, ref.size));
}

void Simulation::poll(Company& co, Station& st) {
  if (st.busy) return;
  for (const auto& o : co.orders->poll(st.id)) {
    OrderRun& r = *by_order_.at(o.order_id);
    if (!needs_met(r)) continue;
    st.busy = true;
    r.station = &st;
    co.orders->publish({o.order_id, OrderState::Assigned, clock_.now(), 0});
    trace(st.id.canonical(), "assign", o.order_id);
    after(kStep, st.id.canonical(), [this, &r] { setup_device(r); });
    return;
  }
}

void Simulation::setup_device(OrderRun& r) {
  const Station& st = *r.station;
  const Procedure& p = *r.procedure;
  const Manifest shell = registry_.resolve(st.id);
  r.company->orders->publish({r.order.order_id, OrderState::InProgress, clock_.now(), 0});
  trace(st.id.canonical(), "setup",
        fmt::format("{} procedure={} method={} grid={}x{} reject>={} capable={}", r.order.order_id, p.procedure_id,
                    p.method, p.rows, p.cols, p.reject_threshold, shell.advertises(p.method)));
  if (has_fault(Fault::DropGateway)) {
    r.blocked = "gateway unavailable, no metadata seed";
    trace(st.id.canonical(), "blocked", fmt::format("{} {}", r.order.order_id, r.blocked));
    return;
  }
  r.seed = order_to_archive_work(MappingTable::standard(), r.order);
  trace(fmt::format("gateway:{}", r.company->spec->name), "seed",
        fmt::format("{} {} element(s)", r.order.order_id, r.seed.size()));
  after(kAcquireTime, st.id.canonical(), [this, &r] { acquire_data(r); });
}

void Simulation::acquire_data(OrderRun& r) {
  Rng rng = Rng::stream(cfg_.seed, r.order.order_id);
  const std::size_t n = std::max<std::size_t>(1, r.procedure->min_refs);
  for (std::size_t i = 0; i < n; ++i) {
    AcquisitionContext ctx{mint_uid(), r.order.component_serial, r.station->id, clock_.now(), r.seed, r.spec->defects};
    r.objects.push_back(acquire(*r.procedure, ctx, rng, cfg_.noise));
    trace(r.station->id.canonical(), "acquire",
          fmt::format("{} uid={} grid={}x{}", r.order.order_id, ctx.object_uid, r.procedure->rows, r.procedure->cols));
  }
  after(kStep, r.station->id.canonical(), [this, &r] { evaluate_data(r); });
}

void Simulation::evaluate_data(OrderRun& r) {
  for (const auto& obj : r.objects) {
    auto found = evaluate(obj, *r.procedure, cfg_.noise.detection_floor);
    r.findings.insert(r.findings.end(), found.begin(), found.end());
  }
  float peak = 0.0F;
  for (const auto& f : r.findings) peak = std::max(peak, f.amplitude);
  trace(r.station->id.canonical(), "evaluate",
        fmt::format("{} indications={} max={:.2f}", r.order.order_id, r.findings.size(), peak));
  after(kStep, r.station->id.canonical(), [this, &r] { store(r); });
}

void Simulation::store(OrderRun& r) {
  for (const auto& obj : r.objects) {
    const std::string uid = r.company->archive_client->store(obj);
    r.uids.push_back(uid);
    trace(fmt::format("archive:{}", r.company->spec->name), "store",
          fmt::format("{} uid={} order={}", r.order.order_id, uid, obj.order_id().value_or("?")));
  }
  r.objects.clear();
  r.company->orders->publish({r.order.order_id, OrderState::DataArchived, clock_.now(), 0});
  after(kStep, fmt::format("gateway:{}", r.company->spec->name), [this, &r] { translate(r); });
}

void Simulation::translate(OrderRun& r) {
  r.kpis = archive_result_to_kpis(r.order.order_id, r.findings, r.uids, r.procedure->verdict_rule(),
                                  r.company->archive->probe());
  trace(fmt::format("gateway:{}", r.company->spec->name), "kpi",
        fmt::format("{} verdict={} indications={} refs={}", r.order.order_id, to_string(r.kpis->verdict),
                    r.kpis->indication_count, r.kpis->archived_refs.size()));
  after(kStep, fmt::format("gateway:{}", r.company->spec->name), [this, &r] { report(r); });
}

void Simulation::report(OrderRun& r) {
  const Ack ack = r.company->orders->report(*r.kpis);
  trace(fmt::format("gateway:{}", r.company->spec->name), "report", fmt::format("{} ({})", r.order.order_id, ack.detail));
  r.station->busy = false;
  Company& co = *r.company;
  Station& st = *r.station;
  after(kStep, st.id.canonical(), [this, &co, &st] { poll(co, st); });
  for (auto& ex : exchanges_) {
    if (ex.spec->order_id == r.order.order_id) {
      after(kStep, fmt::format("connector:{}", ex.spec->from), [this, &ex] { exchange(ex); });
    }
  }
}

void Simulation::exchange(ExchangeRun& ex) {
  const ExchangeSpec& spec = *ex.spec;
  const std::string actor = fmt::format("connector:{}", spec.from);
  if (!cfg_.sovereignty) {
    ex.failure = "no data connectors: cross-company exchange impossible";
    trace(actor, "exchange-blocked", fmt::format("{} {} -> {}: {}", spec.id, spec.from, spec.to, ex.failure));
    return;
  }
  Company& from = companies_.at(spec.from);
  Company& to = companies_.at(spec.to);
  const OrderRun& src = *by_order_.at(spec.order_id);
  try {
    UsagePolicy policy = spec.policy;
    if (spec.expires_in) policy.expires = LogicalClock::at(clock_.tick() + *spec.expires_in);
    const std::string cid = from.connector->offer(to.connector_id, src.uids.front(), policy);
    trace(actor, "offer", fmt::format("{} contract={} uid={} max_reads={}", spec.id, cid, src.uids.front(),
                                      policy.max_reads ? std::to_string(*policy.max_reads) : "unlimited"));
    to.connector->accept(cid);
    const std::string to_actor = fmt::format("connector:{}", spec.to);
    trace(to_actor, "accept", cid);

    std::uint32_t attempts = spec.reads;
    if (has_fault(Fault::PolicyOverread) && policy.max_reads &&
        &ex == &*std::find_if(exchanges_.begin(), exchanges_.end(),
                              [](const ExchangeRun& e) { return e.spec->policy.max_reads.has_value(); })) {
      attempts = std::max(attempts, *policy.max_reads) + 1;
      trace(to_actor, "fault", fmt::format("{} {} attempts against max_reads={}", to_string(Fault::PolicyOverread),
                                           attempts, *policy.max_reads));
    }
    for (std::uint32_t i = 0; i < attempts; ++i) {
      try {
        DataObject obj = to.connector->consume(cid);
        trace(to_actor, "read", fmt::format("{} uid={} cached={}", cid, obj.uid().value_or("?"),
                                            to.connector->cached_bytes(cid)));
      } catch (const Error& e) {
        trace(to_actor, "deny", fmt::format("{} {}", cid, to_string(e.code())));
      }
    }

    if (spec.forward_to) {
      Company& third = companies_.at(*spec.forward_to);
      const std::string third_actor = fmt::format("connector:{}", *spec.forward_to);
      try {
        const std::string derived = to.connector->forward(cid, third.connector_id, policy);
        trace(to_actor, "forward", fmt::format("{} -> {}", cid, derived));
        third.connector->accept(derived);
        DataObject obj = third.connector->consume(derived);
        trace(third_actor, "read", fmt::format("{} uid={}", derived, obj.uid().value_or("?")));
      } catch (const Error& e) {
        trace(to_actor, "deny", fmt::format("forward of {}: {}", cid, to_string(e.code())));
      }
    }
    ex.done = true;
    trace(actor, "exchange-done", spec.id);
    wake_all();
  } catch (const Error& e) {
    ex.failure = e.what();
    trace(actor, "exchange-failed", fmt::format("{}: {}", spec.id, e.what()));
  }
}

void Simulation::tamper() {
  for (auto& [name, co] : companies_) {
    const auto uids = co.archive->list();
    if (uids.size() < 2) continue;
    Rng rng = Rng::stream(cfg_.seed, "tamper");
    const std::size_t k = 1 + rng.below(uids.size() - 1);
    const fs::path path = co.archive->object_path(uids[k]);
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(0, std::ios::end);
    const auto size = static_cast<std::uint64_t>(f.tellg());
    const auto offset = static_cast<std::streamoff>(rng.below(size));
    char byte = 0;
    f.seekg(offset);
    f.get(byte);
    byte = static_cast<char>(byte ^ 0xFF);
    f.seekp(offset);
    f.put(byte);
    trace("sim", "fault", fmt::format("{} archive={} index={} uid={} byte={}", to_string(Fault::TamperArchiveByte),
                                      name, k, uids[k], offset));
    return;
  }
}

void Simulation::finish() {
  RunReport& rep = result_.report;
  rep.scenario = cfg_.name;
  rep.seed = cfg_.seed;
  for (Fault f : cfg_.faults) rep.faults.emplace_back(to_string(f));

  for (auto& [name, co] : companies_) {
    const ChainStatus status = co.archive->verify_chain();
    rep.archives[name] = status.str();
    rep.objects[name] = co.archive->size();
    if (!status.ok && rep.chain_ok) {
      rep.chain_ok = false;
      rep.chain_status = status.str();
    }
    if (co.connector) {
      for (const auto& e : co.connector->audit()) rep.audit_denies += e.action == AuditAction::Deny ? 1 : 0;
    }
  }

  std::vector<ComponentLocus> present;
  const auto& std_loci = LociRegistry::standard();
  for (std::string_view c : {"twin-registry", "orders-bus", "archive"}) present.push_back(std_loci.locate(c));
  if (!has_fault(Fault::DropGateway)) present.push_back(std_loci.locate("gateway"));
  if (cfg_.sovereignty) present.push_back(std_loci.locate("sovereignty"));
  present.insert(present.end(), cfg_.extra_loci.begin(), cfg_.extra_loci.end());
  for (const auto& gap : coverage_check(cfg_.rami_required, present)) rep.rami_gaps.push_back(gap.str());

  rep.orders_total = runs_.size();
  rep.exchanges_total = exchanges_.size();
  for (const auto& ex : exchanges_) rep.exchanges_completed += ex.done ? 1 : 0;
  std::vector<std::string> stuck;
  for (const auto& r : runs_) {
    auto rec = r->company->bus->record(r->order.order_id);
    OrderOutcome out{r->company->spec->name, r->order.order_id, rec ? rec->state : OrderState::Queued,
                     rec ? rec->kpis : std::nullopt, r->procedure->min_refs};
    if (out.state == OrderState::Reported) {
      ++rep.reported;
      ++rep.verdicts[std::string(to_string(out.kpis->verdict))];
      if (out.kpis->verdict == Verdict::Reject) ++rep.rejected;
    } else if (!is_terminal(out.state)) {
      std::string why = r->blocked;
      if (why.empty() && out.state == OrderState::Queued) {
        for (const auto& n : r->spec->needs) {
          auto it = std::find_if(exchanges_.begin(), exchanges_.end(), [&](const ExchangeRun& e) { return e.spec->id == n; });
          if (!it->done) why = fmt::format("waiting for exchange {} ({})", n, it->failure);
        }
        if (why.empty()) why = "no capable station took it";
      }
      stuck.push_back(fmt::format("{} blocked in {}: {}", out.order_id, to_string(out.state), why));
    }
    result_.orders.push_back(std::move(out));
  }
  for (const auto& ex : exchanges_) {
    if (!ex.done && stuck.empty()) stuck.push_back(fmt::format("exchange {} incomplete: {}", ex.spec->id, ex.failure));
  }
  if (!stuck.empty()) {
    rep.deadlock = stuck.front();
    if (stuck.size() > 1) *rep.deadlock += fmt::format(" (+{} more)", stuck.size() - 1);
  }

  std::ofstream trace_out(out_ / kTraceFile, std::ios::binary | std::ios::trunc);
  trace_out << result_.trace_text();
  std::ofstream report_out(out_ / kReportFile, std::ios::binary | std::ios::trunc);
  report_out << rep.to_json();
  if (!trace_out || !report_out) throw Error(Errc::IoError, fmt::format("cannot write results under {}", out_.string()));
}

ScenarioResult Simulation::run() {
  setup();
  trace("sim", "start", fmt::format("scenario={} seed={} companies={} orders={} sovereignty={}", cfg_.name, cfg_.seed,
                                    cfg_.companies.size(), cfg_.orders.size(), cfg_.sovereignty));
  for (auto& r : runs_) {
    OrderRun* run = r.get();
    schedule(r->spec->release, fmt::format("mes:{}", r->company->spec->name), [this, run] { submit(*run); });
  }
  while (!queue_.empty()) {
    Event e = queue_.top();
    queue_.pop();
    clock_.advance_to(e.tick);
    e.run();
    drain_status();
  }
  if (has_fault(Fault::TamperArchiveByte)) tamper();
  finish();
  trace("sim", "end", fmt::format("reported={}/{} chain={}", result_.report.reported, result_.report.orders_total,
                                  result_.report.chain_status));
  // Rewrite so the closing line is on disk too.
  std::ofstream(out_ / kTraceFile, std::ios::binary | std::ios::trunc) << result_.trace_text();
  if (result_.report.deadlock) {
    const std::string why = *result_.report.deadlock;
    throw ScenarioDeadlockError(why, std::move(result_));
  }
  return std::move(result_);
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoError, fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));
  Simulation sim(config, out_dir);
  return sim.run();
}

}  // namespace nde4
