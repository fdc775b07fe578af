/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
// The .scen format and its validation.

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nde4/plantsim.hpp"
#include "nde4/semantics.hpp"

namespace nde4 {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kRoleNames = {"MATERIAL_SUPPLIER", "COMPONENT_SUPPLIER", "OEM",
                                                        "OPERATOR"};
constexpr std::array<std::string_view, 4> kFaultNames = {"TAMPER_ARCHIVE_BYTE", "OVERSIZE_WORKFLOW_MSG",
                                                         "POLICY_OVERREAD", "DROP_GATEWAY"};

[[noreturn]] void invalid(const std::string& why) { throw Error(Errc::ConfigInvalid, why); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return j[key].get<T>();
}

Procedure procedure_from(const json& j) {
  Procedure p;
  p.procedure_id = j.at("procedure_id").get<std::string>();
  p.method = get_or<std::string>(j, "method", p.method);
  p.rows = get_or<std::uint16_t>(j, "rows", p.rows);
  p.cols = get_or<std::uint16_t>(j, "cols", p.cols);
  p.reject_threshold = get_or<double>(j, "reject_threshold", p.reject_threshold);
  if (j.contains("rework_threshold") && !j["rework_threshold"].is_null()) {
    p.rework_threshold = j["rework_threshold"].get<double>();
  }
  p.min_refs = get_or<std::size_t>(j, "min_refs", p.min_refs);
  return p;
}

UsagePolicy policy_from(const json& j) {
  UsagePolicy p;
  if (j.contains("max_reads")) {
    p.max_reads = j["max_reads"].is_null() ? std::nullopt : std::optional(j["max_reads"].get<std::uint32_t>());
  }
  if (j.contains("expires") && !j["expires"].is_null()) {
    auto dt = DateTime::try_parse(j["expires"].get<std::string>());
    if (!dt) invalid("policy.expires is not YYYYMMDDThhmmss");
    p.expires = *dt;
  }
  p.allow_forward = get_or<bool>(j, "allow_forward", p.allow_forward);
  p.purpose = get_or<std::string>(j, "purpose", p.purpose);
  return p;
}

ScenarioConfig config_from(const json& doc) {
  if (!doc.is_object()) invalid("scenario must be a JSON object");
  ScenarioConfig cfg;
  cfg.name = get_or<std::string>(doc, "name", cfg.name);
  cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed);
  cfg.sovereignty = get_or<bool>(doc, "sovereignty", cfg.sovereignty);
  cfg.full_chain = get_or<bool>(doc, "full_chain", cfg.full_chain);

  for (const auto& c : doc.at("companies")) {
    CompanySpec co;
    co.name = c.at("name").get<std::string>();
    auto role = company_role_from_string(c.at("role").get<std::string>());
    if (!role) invalid(fmt::format("company '{}': unknown role '{}'", co.name, c["role"].get<std::string>()));
    co.role = *role;
    for (const auto& s : c.value("stations", json::array())) {
      StationSpec st;
      st.serial = s.at("serial").get<std::string>();
      st.type = get_or<std::string>(s, "type", st.type);
      st.methods = get_or<std::vector<std::string>>(s, "methods", {});
      st.person = get_or<bool>(s, "person", false);
      co.stations.push_back(std::move(st));
    }
    for (const auto& p : c.value("procedures", json::array())) co.procedures.push_back(procedure_from(p));
    cfg.companies.push_back(std::move(co));
  }

  for (const auto& o : doc.value("orders", json::array())) {
    OrderSpec os;
    os.company = o.at("company").get<std::string>();
    os.order_id = o.at("order_id").get<std::string>();
    os.component_serial = o.at("component_serial").get<std::string>();
    os.component_type = o.at("component_type").get<std::string>();
    os.procedure_id = o.at("procedure_id").get<std::string>();
    if (o.contains("station") && !o["station"].is_null()) os.station = o["station"].get<std::string>();
    os.priority = get_or<unsigned>(o, "priority", 0);
    os.release = get_or<std::int64_t>(o, "release", 0);
    os.due_in = get_or<std::int64_t>(o, "due_in", os.due_in);
    os.needs = get_or<std::vector<std::string>>(o, "needs", {});
    if (o.contains("defects") && !o["defects"].is_null()) {
      std::vector<DefectSpec> ds;
      for (const auto& d : o["defects"]) {
        ds.push_back({d.at("row").get<std::uint16_t>(), d.at("col").get<std::uint16_t>(),
                      get_or<std::uint16_t>(d, "height", 1), get_or<std::uint16_t>(d, "width", 1),
                      d.at("peak").get<float>()});
      }
      os.defects = std::move(ds);
    }
    cfg.orders.push_back(std::move(os));
  }

  for (const auto& e : doc.value("exchanges", json::array())) {
    ExchangeSpec ex;
    ex.id = e.at("id").get<std::string>();
    ex.from = e.at("from").get<std::string>();
    ex.to = e.at("to").get<std::string>();
    ex.order_id = e.at("order_id").get<std::string>();
    if (e.contains("policy")) ex.policy = policy_from(e["policy"]);
    if (e.contains("expires_in") && !e["expires_in"].is_null()) ex.expires_in = e["expires_in"].get<std::int64_t>();
    ex.reads = get_or<std::uint32_t>(e, "reads", ex.reads);
    if (e.contains("forward_to") && !e["forward_to"].is_null()) ex.forward_to = e["forward_to"].get<std::string>();
    cfg.exchanges.push_back(std::move(ex));
  }

  for (const auto& f : doc.value("faults", json::array())) {
    auto fault = fault_from_string(f.get<std::string>());
    if (!fault) invalid(fmt::format("unknown fault '{}'", f.get<std::string>()));
    cfg.faults.push_back(*fault);
  }

  for (const auto& r : doc.value("rami_required", json::array())) {
    try {
      auto cells = expand_cells(r.get<std::string>());
      cfg.rami_required.insert(cells.begin(), cells.end());
    } catch (const Error& e) {
      invalid(fmt::format("rami_required: {}", e.detail()));
    }
  }

  if (doc.contains("allowlist") && !doc["allowlist"].is_null()) {
    cfg.allowlist = doc["allowlist"].get<std::vector<std::string>>();
  }

  if (doc.contains("noise")) {
    const json& n = doc["noise"];
    NoiseModel& m = cfg.noise;
    m.noise_max = get_or<double>(n, "noise_max", m.noise_max);
    m.detection_floor = get_or<double>(n, "detection_floor", m.detection_floor);
    m.peak_min = get_or<double>(n, "peak_min", m.peak_min);
    m.peak_max = get_or<double>(n, "peak_max", m.peak_max);
    m.shoulder = get_or<double>(n, "shoulder", m.shoulder);
    m.max_defects = get_or<unsigned>(n, "max_defects", m.max_defects);
    m.max_extent = get_or<unsigned>(n, "max_extent", m.max_extent);
  }

  for (const auto& l : doc.value("loci", json::array())) {
    ComponentLocus locus{l.at("component").get<std::string>(), {}};
    for (const auto& p : l.at("cells")) {
      try {
        auto cells = expand_cells(p.get<std::string>());
        locus.cells.insert(cells.begin(), cells.end());
      } catch (const Error& e) {
        invalid(fmt::format("loci: {}", e.detail()));
      }
    }
    cfg.extra_loci.push_back(std::move(locus));
  }
  return cfg;
}

const CompanySpec* find_company(const ScenarioConfig& cfg, std::string_view name) {
  for (const auto& c : cfg.companies) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Procedure* find_procedure(const CompanySpec& co, std::string_view id) {
  for (const auto& p : co.procedures) {
    if (p.procedure_id == id) return &p;
  }
  return nullptr;
}

void check_fault(const ScenarioConfig& cfg, Fault f) {
  auto not_applicable = [&](std::string_view why) {
    throw Error(Errc::FaultNotApplicable, fmt::format("{}: {}", to_string(f), why));
  };
  switch (f) {
    case Fault::TamperArchiveByte: {
      // The tampered object must not be the first in its chain.
      std::map<std::string, std::size_t> objects;
      for (const auto& o : cfg.orders) {
        const CompanySpec* co = find_company(cfg, o.company);
        const Procedure* p = co != nullptr ? find_procedure(*co, o.procedure_id) : nullptr;
        objects[o.company] += p != nullptr ? std::max<std::size_t>(1, p->min_refs) : 1;
      }
      if (std::none_of(objects.begin(), objects.end(), [](const auto& kv) { return kv.second >= 2; })) {
        not_applicable("no archive will hold two objects");
      }
      break;
    }
    case Fault::OversizeWorkflowMsg:
    case Fault::DropGateway:
      if (cfg.orders.empty()) not_applicable("scenario has no orders");
      break;
    case Fault::PolicyOverread:
      if (!cfg.sovereignty) not_applicable("sovereignty is disabled");
      if (std::none_of(cfg.exchanges.begin(), cfg.exchanges.end(),
                       [](const ExchangeSpec& e) { return e.policy.max_reads.has_value(); })) {
        not_applicable("no exchange has a bounded read policy");
      }
      break;
  }
}

}  // namespace

std::string_view to_string(CompanyRole r) noexcept { return kRoleNames[static_cast<std::size_t>(r)]; }

std::optional<CompanyRole> company_role_from_string(std::string_view s) noexcept {
  auto it = std::find(kRoleNames.begin(), kRoleNames.end(), s);
  if (it == kRoleNames.end()) return std::nullopt;
  return static_cast<CompanyRole>(it - kRoleNames.begin());
}

std::string_view to_string(Fault f) noexcept { return kFaultNames[static_cast<std::size_t>(f)]; }

std::optional<Fault> fault_from_string(std::string_view s) noexcept {
  auto it = std::find(kFaultNames.begin(), kFaultNames.end(), s);
  if (it == kFaultNames.end()) return std::nullopt;
  return static_cast<Fault>(it - kFaultNames.begin());
}

void ScenarioConfig::validate() const {
  if (name.empty()) invalid("scenario name is empty");
  if (companies.empty()) invalid("scenario has no companies");
  noise.validate();

  std::set<std::string> names;
  std::set<CompanyRole> roles;
  for (const auto& co : companies) {
    if (!is_name_token(co.name)) invalid(fmt::format("company name '{}' is not a lowercase token", co.name));
    if (!names.insert(co.name).second) invalid(fmt::format("company '{}' defined twice", co.name));
    roles.insert(co.role);
    std::set<std::string> serials;
    for (const auto& st : co.stations) {
      if (!is_serial_token(st.serial)) invalid(fmt::format("{}: station serial '{}' is not a token", co.name, st.serial));
      if (!is_name_token(st.type)) invalid(fmt::format("{}: station type '{}' is not a token", co.name, st.type));
      if (st.type == "plant" || st.type == "connector") {
        invalid(fmt::format("{}: station type '{}' is reserved", co.name, st.type));
      }
      if (!serials.insert(st.serial).second) invalid(fmt::format("{}: station '{}' defined twice", co.name, st.serial));
      for (const auto& m : st.methods) {
        if (!is_method_code(m)) invalid(fmt::format("{}: station '{}' has unknown method '{}'", co.name, st.serial, m));
      }
    }
    ProcedureCatalog catalog;
    for (const auto& p : co.procedures) catalog.add(p);
  }
  if (full_chain) {
    for (auto r : {CompanyRole::MaterialSupplier, CompanyRole::ComponentSupplier, CompanyRole::Oem,
                   CompanyRole::Operator}) {
      if (roles.count(r) == 0) invalid(fmt::format("full chain needs a {} company", to_string(r)));
    }
  }

  std::set<std::string> exchange_ids;
  for (const auto& ex : exchanges) exchange_ids.insert(ex.id);

  std::set<std::string> order_ids;
  for (const auto& o : orders) {
    const CompanySpec* co = find_company(*this, o.company);
    if (co == nullptr) invalid(fmt::format("order '{}': unknown company '{}'", o.order_id, o.company));
    if (!is_serial_token(o.order_id)) invalid(fmt::format("order id '{}' is not a token", o.order_id));
    if (!order_ids.insert(o.order_id).second) invalid(fmt::format("order '{}' defined twice", o.order_id));
    if (!is_serial_token(o.component_serial)) invalid(fmt::format("order '{}': bad component serial", o.order_id));
    if (!is_name_token(o.component_type)) invalid(fmt::format("order '{}': bad component type", o.order_id));
    const Procedure* p = find_procedure(*co, o.procedure_id);
    if (p == nullptr) invalid(fmt::format("order '{}': {} has no procedure '{}'", o.order_id, co->name, o.procedure_id));
    if (o.station && std::none_of(co->stations.begin(), co->stations.end(),
                                  [&](const StationSpec& s) { return s.serial == *o.station; })) {
      invalid(fmt::format("order '{}': {} has no station '{}'", o.order_id, co->name, *o.station));
    }
    if (o.release < 0 || o.due_in < 0) invalid(fmt::format("order '{}': negative release or due_in", o.order_id));
    for (const auto& n : o.needs) {
      if (exchange_ids.count(n) == 0) invalid(fmt::format("order '{}' needs unknown exchange '{}'", o.order_id, n));
    }
    if (o.defects) {
      for (const auto& d : *o.defects) {
        if (d.height == 0 || d.width == 0 || d.row + d.height > p->rows || d.col + d.width > p->cols) {
          invalid(fmt::format("order '{}': defect outside the {}x{} grid", o.order_id, p->rows, p->cols));
        }
        if (!(d.peak >= 0.0F && d.peak <= 100.0F)) invalid(fmt::format("order '{}': defect peak outside [0, 100]", o.order_id));
      }
    }
  }

  std::set<std::string> seen_ex;
  for (const auto& ex : exchanges) {
    if (!is_serial_token(ex.id)) invalid(fmt::format("exchange id '{}' is not a token", ex.id));
    if (!seen_ex.insert(ex.id).second) invalid(fmt::format("exchange '{}' defined twice", ex.id));
    if (find_company(*this, ex.from) == nullptr || find_company(*this, ex.to) == nullptr) {
      invalid(fmt::format("exchange '{}': unknown company", ex.id));
    }
    if (ex.from == ex.to) invalid(fmt::format("exchange '{}' stays within '{}'", ex.id, ex.from));
    auto src = std::find_if(orders.begin(), orders.end(), [&](const OrderSpec& o) { return o.order_id == ex.order_id; });
    if (src == orders.end() || src->company != ex.from) {
      invalid(fmt::format("exchange '{}': '{}' is not an order of {}", ex.id, ex.order_id, ex.from));
    }
    if (ex.reads == 0) invalid(fmt::format("exchange '{}': reads must be at least 1", ex.id));
    if (ex.expires_in && *ex.expires_in <= 0) invalid(fmt::format("exchange '{}': expires_in must be positive", ex.id));
    if (ex.policy.max_reads && *ex.policy.max_reads == 0) invalid(fmt::format("exchange '{}': max_reads is 0", ex.id));
    if (!is_name_token(ex.policy.purpose)) invalid(fmt::format("exchange '{}': bad purpose", ex.id));
    if (ex.forward_to) {
      if (find_company(*this, *ex.forward_to) == nullptr) invalid(fmt::format("exchange '{}': unknown forward target", ex.id));
      if (*ex.forward_to == ex.to) invalid(fmt::format("exchange '{}' forwards to its own consumer", ex.id));
    }
  }

  if (allowlist) {
    for (const auto& n : *allowlist) {
      if (find_company(*this, n) == nullptr) invalid(fmt::format("allowlist names unknown company '{}'", n));
    }
  }
  for (const auto& l : extra_loci) {
    if (!is_name_token(l.component) || l.cells.empty()) invalid(fmt::format("bad locus '{}'", l.component));
  }

  std::set<Fault> faults_seen;
  for (Fault f : faults) {
    if (!faults_seen.insert(f).second) invalid(fmt::format("fault {} listed twice", to_string(f)));
    check_fault(*this, f);
  }
}

ScenarioConfig parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, "malformed scenario JSON", e.byte > 0 ? e.byte - 1 : 0);
  }
  ScenarioConfig cfg;
  try {
    cfg = config_from(doc);
  } catch (const json::exception& e) {
    invalid(fmt::format("scenario: {}", e.what()));
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

ScenarioConfig inject_fault(ScenarioConfig config, Fault fault) {
  check_fault(config, fault);
  if (std::find(config.faults.begin(), config.faults.end(), fault) == config.faults.end()) {
    config.faults.push_back(fault);
  }
  return config;
}

}  // namespace nde4
