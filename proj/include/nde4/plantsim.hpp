/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "nde4/data_object.hpp"
#include "nde4/datetime.hpp"
#include "nde4/error.hpp"
#include "nde4/inspection.hpp"
#include "nde4/orders.hpp"
#include "nde4/rami.hpp"
#include "nde4/sovereignty.hpp"

namespace nde4 {

// --- randomness ----------------------------------------------------------------------

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seeded stream. Draws are implemented here rather than through the
/// standard distributions, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  /// Independent stream keyed by a label, e.g. an order id.
  [[nodiscard]] static Rng stream(std::uint64_t seed, std::string_view label);

  [[nodiscard]] std::uint64_t next() { return engine_(); }
  /// [0, 1)
  [[nodiscard]] double uniform();
  /// [lo, hi)
  [[nodiscard]] double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// [0, n); n > 0
  [[nodiscard]] std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::mt19937_64 engine_;
};

// --- synthetic inspection data ------------------------------------------------------

/// Synthetic defaults, not calibrated to any physics. Amplitudes in percent-FSH.
struct NoiseModel {
  double noise_max = 10.0;
  double detection_floor = 20.0;
  double peak_min = 30.0;
  double peak_max = 95.0;
  /// Cells of a defect other than its peak get this fraction of the peak.
  double shoulder = 0.8;
  unsigned max_defects = 2;
  /// Largest defect rectangle edge, in cells.
  unsigned max_extent = 3;

  /// Throws Error(ConfigInvalid).
  void validate() const;
};

/// A height x width defect with its top-left, peak cell at (row, col).
struct DefectSpec {
  std::uint16_t row = 0;
  std::uint16_t col = 0;
  std::uint16_t height = 1;
  std::uint16_t width = 1;
  float peak = 50.0F;
};

struct AcquisitionContext {
  std::string object_uid;
  std::string component_serial;
  std::optional<InstanceId> device;
  DateTime created;
  /// Gateway metadata seed for the order.
  std::vector<Element> seed;
  /// Overrides the random defect draw when set.
  std::optional<std::vector<DefectSpec>> defects;
};

/// rows x cols amplitude grid: uniform noise plus 0..max_defects defects.
[[nodiscard]] DataObject acquire(const Procedure& procedure, const AcquisitionContext& ctx, Rng& rng,
                                 const NoiseModel& noise = {});

/// Cells at or above the floor, merged 4-connected, one indication per
/// region at its peak (first in row-major order on ties). Regions are
/// listed in row-major order of their first cell.
/// Throws Error(GridShapeMismatch).
[[nodiscard]] std::vector<Indication> evaluate(const DataObject& obj, const Procedure& procedure,
                                               double detection_floor = NoiseModel{}.detection_floor);

// --- scenario configuration -----------------------------------------------------------

enum class CompanyRole { MaterialSupplier, ComponentSupplier, Oem, Operator };

[[nodiscard]] std::string_view to_string(CompanyRole r) noexcept;
[[nodiscard]] std::optional<CompanyRole> company_role_from_string(std::string_view s) noexcept;

struct StationSpec {
  std::string serial;
  /// Type name within the company namespace, e.g. "ut-system".
  std::string type = "inspection-system";
  std::vector<std::string> methods;
  /// A human inspector rather than a machine; registered the same way.
  bool person = false;
};

struct CompanySpec {
  std::string name;
  CompanyRole role = CompanyRole::Oem;
  std::vector<StationSpec> stations;
  std::vector<Procedure> procedures;
};

struct OrderSpec {
  std::string company;
  std::string order_id;
  std::string component_serial;
  std::string component_type;
  std::string procedure_id;
  std::optional<std::string> station;
  unsigned priority = 0;
  /// Ticks.
  std::int64_t release = 0;
  std::int64_t due_in = 86400;
  /// Exchanges that must complete before the order can be assigned.
  std::vector<std::string> needs;
  std::optional<std::vector<DefectSpec>> defects;
};

struct ExchangeSpec {
  std::string id;
  std::string from;
  std::string to;
  /// Source order; its first archived object is offered once it is REPORTED.
  std::string order_id;
  UsagePolicy policy;
  /// Relative expiry in ticks from the offer; overrides policy.expires.
  std::optional<std::int64_t> expires_in;
  std::uint32_t reads = 1;
  std::optional<std::string> forward_to;
};

enum class Fault { TamperArchiveByte, OversizeWorkflowMsg, PolicyOverread, DropGateway };

[[nodiscard]] std::string_view to_string(Fault f) noexcept;
[[nodiscard]] std::optional<Fault> fault_from_string(std::string_view s) noexcept;

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  bool sovereignty = true;
  /// Requires at least one company per role.
  bool full_chain = false;
  std::vector<CompanySpec> companies;
  std::vector<OrderSpec> orders;
  std::vector<ExchangeSpec> exchanges;
  std::vector<Fault> faults;
  CellSet rami_required;
  /// Company names whose connectors are certified; unset = all.
  std::optional<std::vector<std::string>> allowlist;
  NoiseModel noise;
  std::vector<ComponentLocus> extra_loci;

  /// Throws Error(ConfigInvalid | FaultNotApplicable).
  void validate() const;
};

/// The .scen encoding (JSON). Throws Error(ParseError | ConfigInvalid).
[[nodiscard]] ScenarioConfig parse_scenario(std::string_view text);
[[nodiscard]] ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Copy of config with the fault enabled. Throws Error(FaultNotApplicable).
[[nodiscard]] ScenarioConfig inject_fault(ScenarioConfig config, Fault fault);

// --- running ------------------------------------------------------------------------

struct TraceEvent {
  std::uint64_t seq = 0;
  DateTime at;
  std::string actor;
  std::string kind;
  std::string summary;

  /// "seq<TAB>at<TAB>actor<TAB>kind<TAB>summary"
  [[nodiscard]] std::string str() const;
};

struct OrderOutcome {
  std::string company;
  std::string order_id;
  OrderState state = OrderState::Queued;
  std::optional<ReportedValues> kpis;
  std::size_t min_refs = 1;
};

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t orders_total = 0;
  std::size_t reported = 0;
  /// Orders whose verdict rejected the component.
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> verdicts;
  /// "chain OK" or the first "bad at index k" over all archives.
  std::string chain_status = "chain OK";
  bool chain_ok = true;
  std::map<std::string, std::string> archives;
  std::map<std::string, std::size_t> objects;
  std::vector<std::string> rami_gaps;
  std::size_t audit_denies = 0;
  std::size_t exchanges_total = 0;
  std::size_t exchanges_completed = 0;
  std::size_t references = 0;
  std::uint64_t max_orders_payload = 0;
  std::vector<std::string> faults;
  std::optional<std::string> deadlock;

  /// Gaps, denies, tamper or deadlock.
  [[nodiscard]] bool has_findings() const noexcept;
  [[nodiscard]] std::string to_json() const;
};

struct ScenarioResult {
  std::vector<TraceEvent> trace;
  RunReport report;
  std::vector<OrderOutcome> orders;
  std::map<std::string, std::filesystem::path> archive_dirs;
  std::map<std::string, std::filesystem::path> audit_logs;

  [[nodiscard]] std::string trace_text() const;
};

/// The run could not finish; partial() is what happened up to the stall.
class ScenarioDeadlockError : public Error {
 public:
  ScenarioDeadlockError(const std::string& message, ScenarioResult partial)
      : Error(Errc::ScenarioDeadlock, message), partial_(std::move(partial)) {}
  [[nodiscard]] const ScenarioResult& partial() const noexcept { return partial_; }

 private:
  ScenarioResult partial_;
};

inline constexpr std::string_view kTraceFile = "run.trace";
inline constexpr std::string_view kReportFile = "report.json";

/// Runs the scenario with archives and audit logs under out_dir, then writes
/// run.trace and report.json there (also on deadlock).
/// Throws Error(ConfigInvalid | FaultNotApplicable), ScenarioDeadlockError.
ScenarioResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

}  // namespace nde4
