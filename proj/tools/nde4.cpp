/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
// nde4: run plant scenarios, inspect archives, validate twins and objects,
// and check reference-architecture coverage.
//
// Exit codes: 0 ok, 1 findings, 2 usage error, 3 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "nde4/archive.hpp"
#include "nde4/data_object.hpp"
#include "nde4/gateway.hpp"
#include "nde4/plantsim.hpp"
#include "nde4/rami.hpp"
#include "nde4/registry.hpp"
#include "nde4/semantics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kFindings = 1, kUsage = 2, kRuntime = 3 };

struct Options {
  std::string format = "text";
  std::string dict_path;
  std::string data_dir;

  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  std::vector<std::string> faults;

  std::string uid;
  std::string path;

  std::string component;
  std::vector<std::string> require;
  std::vector<std::string> components;
  std::string loci_path;

  std::vector<std::string> known;
};

bool as_json(const Options& o) { return o.format == "json"; }

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw nde4::Error(nde4::Errc::IoError, fmt::format("cannot read {}", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const nde4::Dictionary& dictionary(const Options& o) {
  static std::optional<nde4::Dictionary> custom;
  if (o.dict_path.empty()) return nde4::Dictionary::standard();
  if (!custom) custom.emplace(nde4::Dictionary::from_tsv(read_text(o.dict_path)));
  return *custom;
}

const nde4::LociRegistry& loci(const Options& o) {
  static std::optional<nde4::LociRegistry> custom;
  if (o.loci_path.empty()) return nde4::LociRegistry::standard();
  if (!custom) custom.emplace(nde4::LociRegistry::from_tsv(read_text(o.loci_path)));
  return *custom;
}

fs::path data_dir(const Options& o) {
  fs::path dir = o.data_dir.empty() ? nde4::Archive::default_dir() : fs::path(o.data_dir);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw nde4::Error(nde4::Errc::IoError, fmt::format("data directory {} does not exist", dir.string()));
  }
  return dir;
}

json report_json(const nde4::Report& r) {
  json arr = json::array();
  for (const auto& f : r.findings()) {
    arr.push_back({{"kind", nde4::to_string(f.kind)}, {"severity", nde4::to_string(f.severity)}, {"detail", f.detail}});
  }
  return arr;
}

// Info-level notes (e.g. private tags) are reported but do not fail a check.
int print_report(const Options& o, const std::string& subject, const nde4::Report& r) {
  const int code = r.clean() ? kOk : kFindings;
  if (as_json(o)) {
    emit({{"subject", subject}, {"ok", code == kOk}, {"findings", report_json(r)}});
  } else {
    std::cout << r.str();
    std::cout << subject << ": " << (code == kOk ? "valid" : fmt::format("{} finding(s)", r.findings().size()))
              << '\n';
  }
  return code;
}

// --- sim ----------------------------------------------------------------------------

void clear_outputs(const fs::path& out) {
  for (const char* sub : {"archive", "audit"}) fs::remove_all(out / sub);
  fs::remove(out / nde4::kTraceFile);
  fs::remove(out / nde4::kReportFile);
}

void print_summary(const Options& o, const nde4::RunReport& rep, const fs::path& out) {
  if (as_json(o)) {
    std::cout << rep.to_json();
    return;
  }
  std::cout << fmt::format("scenario {} seed {}\n", rep.scenario, rep.seed);
  std::cout << fmt::format("orders: reported={}/{} rejected={}\n", rep.reported, rep.orders_total, rep.rejected);
  for (const auto& [verdict, n] : rep.verdicts) std::cout << fmt::format("  {} {}\n", verdict, n);
  for (const auto& [name, status] : rep.archives) {
    std::cout << fmt::format("archive {}: {} ({} objects)\n", name, status, rep.objects.at(name));
  }
  std::cout << fmt::format("exchanges: {}/{} completed, audit denies={}\n", rep.exchanges_completed,
                           rep.exchanges_total, rep.audit_denies);
  if (rep.references != 0) std::cout << fmt::format("archived by reference: {}\n", rep.references);
  std::cout << fmt::format("max ORDERS payload: {} B\n", rep.max_orders_payload);
  if (!rep.faults.empty()) std::cout << fmt::format("faults: {}\n", fmt::join(rep.faults, ","));
  std::cout << fmt::format("rami gaps: {}\n", rep.rami_gaps.size());
  for (const auto& g : rep.rami_gaps) std::cout << "  " << g << '\n';
  if (rep.deadlock) std::cout << "deadlock: " << *rep.deadlock << '\n';
  std::cout << fmt::format("trace: {}\n", (out / nde4::kTraceFile).string());
}

int cmd_sim_run(const Options& o) {
  nde4::ScenarioConfig cfg = nde4::load_scenario(o.scenario);
  if (o.seed) cfg.seed = *o.seed;
  for (const auto& name : o.faults) {
    auto f = nde4::fault_from_string(name);
    if (!f) throw CLI::ValidationError("--fault", fmt::format("unknown fault '{}'", name));
    cfg = nde4::inject_fault(std::move(cfg), *f);
  }
  const fs::path out(o.out);
  if (o.force) clear_outputs(out);
  try {
    const nde4::ScenarioResult result = nde4::run_scenario(cfg, out);
    print_summary(o, result.report, out);
    return result.report.has_findings() ? kFindings : kOk;
  } catch (const nde4::ScenarioDeadlockError& e) {
    print_summary(o, e.partial().report, out);
    throw;
  }
}

// --- archive ------------------------------------------------------------------------

int cmd_archive_verify(const Options& o) {
  const nde4::Archive archive(data_dir(o), dictionary(o));
  const nde4::ChainStatus st = archive.verify_chain();
  if (as_json(o)) {
    json j = {{"ok", st.ok}, {"objects", archive.size()}, {"status", st.str()}};
    if (st.first_bad) j["first_bad"] = *st.first_bad;
    if (!st.reason.empty()) j["reason"] = st.reason;
    emit(j);
  } else {
    std::cout << st.str();
    if (!st.ok && !st.reason.empty()) std::cout << " (" << st.reason << ")";
    std::cout << '\n';
  }
  return st.ok ? kOk : kFindings;
}

int cmd_archive_ls(const Options& o) {
  const nde4::Archive archive(data_dir(o), dictionary(o));
  const auto uids = archive.list();
  if (as_json(o)) {
    emit(uids);
  } else {
    for (const auto& u : uids) std::cout << u << '\n';
  }
  return kOk;
}

struct DumpLine {
  std::string name;
  std::string tag;
  std::string value;
};

std::vector<DumpLine> dump_lines(const nde4::Dictionary& dict, const nde4::DataObject& obj) {
  std::vector<DumpLine> lines;
  for (const auto& el : obj.elements()) {
    nde4::TagDefinition def{el.tag, "unknown", nde4::ValueRep::BYTES, std::nullopt, nde4::Multiplicity::One};
    if (const auto* d = dict.find(el.tag)) {
      def = *d;
    } else if (el.tag.is_private()) {
      def.name = "private";
    }
    lines.push_back({def.name, el.tag.str(), nde4::format_value(def, el.value)});
  }
  return lines;
}

int cmd_archive_dump(const Options& o) {
  const nde4::Archive archive(data_dir(o), dictionary(o));
  const nde4::DataObject obj = archive.fetch(o.uid);
  const auto lines = dump_lines(dictionary(o), obj);
  if (as_json(o)) {
    json arr = json::array();
    for (const auto& l : lines) arr.push_back({{"name", l.name}, {"tag", l.tag}, {"value", l.value}});
    emit({{"uid", o.uid}, {"elements", arr}});
  } else {
    for (const auto& l : lines) std::cout << fmt::format("{} {}: {}\n", l.name, l.tag, l.value);
  }
  return kOk;
}

// --- validate -----------------------------------------------------------------------

int cmd_validate_shell(const Options& o) {
  const nde4::Manifest m = nde4::manifest_from_json(read_text(o.path));
  // Children resolve against the manifests named with --known; without any,
  // the check cannot be made and children are taken as present.
  std::set<nde4::InstanceId> known;
  for (const auto& k : o.known) {
    const nde4::Manifest other = nde4::manifest_from_json(read_text(k));
    if (other.asset_instance_id) known.insert(*other.asset_instance_id);
  }
  const bool check_children = !o.known.empty();
  const nde4::Report r = nde4::validate_manifest(
      m, dictionary(o), [&](const nde4::InstanceId& id) { return !check_children || known.count(id) != 0; });
  return print_report(o, o.path, r);
}

int cmd_validate_object(const Options& o) {
  const std::string text = read_text(o.path);
  const nde4::DataObject obj = nde4::decode_object(nde4::to_bytes(text));
  return print_report(o, o.path, nde4::validate_object(dictionary(o), obj));
}

// --- rami ---------------------------------------------------------------------------

std::vector<std::string> cell_strings(const nde4::CellSet& cells) {
  std::vector<std::string> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(c.str());
  return out;
}

int cmd_rami_locate(const Options& o) {
  const nde4::ComponentLocus& l = loci(o).locate(o.component);
  if (as_json(o)) {
    emit({{"component", l.component}, {"cells", cell_strings(l.cells)}});
  } else {
    for (const auto& c : cell_strings(l.cells)) std::cout << c << '\n';
  }
  return kOk;
}

int cmd_rami_coverage(const Options& o) {
  nde4::CellSet required;
  for (const auto& p : o.require) {
    const auto cells = nde4::expand_cells(p);
    required.insert(cells.begin(), cells.end());
  }
  std::vector<nde4::ComponentLocus> present;
  const auto names = o.components.empty() ? loci(o).components() : o.components;
  for (const auto& c : names) present.push_back(loci(o).locate(c));
  const auto gaps = nde4::coverage_check(required, present);
  if (as_json(o)) {
    emit({{"required", required.size()}, {"components", names}, {"gaps", cell_strings(gaps)}});
  } else {
    std::cout << fmt::format("required {} cell(s) over {} component(s): {} gap(s)\n", required.size(), names.size(),
                             gaps.size());
    for (const auto& g : cell_strings(gaps)) std::cout << "  " << g << '\n';
  }
  return gaps.empty() ? kOk : kFindings;
}

// --- tables -------------------------------------------------------------------------

int cmd_tables(std::string_view which, const Options& o) {
  if (which == "dict") std::cout << dictionary(o).to_tsv();
  if (which == "mapping") std::cout << nde4::MappingTable::standard().to_tsv();
  if (which == "loci") std::cout << loci(o).to_tsv();
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"nde4 - NDE data workflow toolkit"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  app.add_option("--dict", o.dict_path, "Tag dictionary TSV replacing the built-in one")->check(CLI::ExistingFile);

  std::function<int()> action;

  auto* sim = app.add_subcommand("sim", "Plant simulation")->require_subcommand(1);
  auto* sim_run = sim->add_subcommand("run", "Run a scenario and write run.trace and report.json");
  sim_run->add_option("--scenario", o.scenario, "Scenario file (.scen)")->required();
  sim_run->add_option("--seed", o.seed, "Override the scenario seed");
  sim_run->add_option("--out", o.out, "Output directory")->required();
  sim_run->add_flag("--force", o.force, "Discard earlier results in the output directory");
  sim_run->add_option("--fault", o.faults, "Inject a fault (repeatable)");
  sim_run->callback([&] { action = [&] { return cmd_sim_run(o); }; });

  auto* archive = app.add_subcommand("archive", "Inspect an object store")->require_subcommand(1);
  archive->add_option("--data-dir", o.data_dir, "Store directory (default: $NDE4_DATA_DIR)");
  archive->add_subcommand("verify", "Verify the digest chain")->callback([&] {
    action = [&] { return cmd_archive_verify(o); };
  });
  archive->add_subcommand("ls", "List UIDs in store order")->callback([&] {
    action = [&] { return cmd_archive_ls(o); };
  });
  auto* dump = archive->add_subcommand("dump", "Print an object's elements");
  dump->add_option("uid", o.uid, "Object UID")->required();
  dump->callback([&] { action = [&] { return cmd_archive_dump(o); }; });

  auto* validate = app.add_subcommand("validate", "Validate a manifest or object file")->require_subcommand(1);
  auto* shell = validate->add_subcommand("shell", "Validate a twin manifest (.aas)");
  shell->add_option("path", o.path, "Manifest file")->required();
  shell->add_option("--known", o.known, "Manifests whose instances count as registered");
  shell->callback([&] { action = [&] { return cmd_validate_shell(o); }; });
  auto* object = validate->add_subcommand("object", "Validate an object file (.ndeo)");
  object->add_option("path", o.path, "Object file")->required();
  object->callback([&] { action = [&] { return cmd_validate_object(o); }; });

  auto* rami = app.add_subcommand("rami", "Reference-architecture coverage")->require_subcommand(1);
  rami->add_option("--loci", o.loci_path, "Loci TSV replacing the built-in table")->check(CLI::ExistingFile);
  auto* locate = rami->add_subcommand("locate", "Print a component's cells");
  locate->add_option("component", o.component, "Component name")->required();
  locate->callback([&] { action = [&] { return cmd_rami_locate(o); }; });
  auto* coverage = rami->add_subcommand("coverage", "List required cells no component covers");
  coverage->add_option("--require", o.require, "Cell pattern LAYER/LIFECYCLE/HIERARCHY, '*' allowed")->required();
  coverage->add_option("--component", o.components, "Components present (default: all)");
  coverage->callback([&] { action = [&] { return cmd_rami_coverage(o); }; });

  auto* tables = app.add_subcommand("tables", "Print a built-in table as TSV")->require_subcommand(1);
  for (const char* t : {"dict", "mapping", "loci"}) {
    tables->add_subcommand(t, fmt::format("Built-in {} table", t))->callback([&, t] {
      action = [&, t] { return cmd_tables(t, o); };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    return action();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const nde4::Error& e) {
    std::cout.flush();
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
