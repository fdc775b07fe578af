/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "nde4/archive.hpp"
#include "nde4/data_object.hpp"
#include "nde4/frame.hpp"
#include "nde4/inspection.hpp"
#include "nde4/orders.hpp"
#include "nde4/plantsim.hpp"
#include "nde4/rami.hpp"
#include "nde4/registry.hpp"

namespace nde4::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view label = "t");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  [[nodiscard]] std::filesystem::path operator/(std::string_view sub) const { return path_ / sub; }

 private:
  std::filesystem::path path_;
};

/// Directory holding the shipped scenarios, data tables and fixtures.
[[nodiscard]] std::filesystem::path source_dir();

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
[[nodiscard]] Bytes read_bytes(const std::filesystem::path& path);

/// Minimal object that passes validation.
[[nodiscard]] DataObject make_object(std::string uid, std::string order_id, std::string serial = "SER-1",
                                     std::string method = "UT");

[[nodiscard]] InspectionOrder make_order(std::string order_id, unsigned priority = 0, std::int64_t due_tick = 0,
                                         std::string procedure_id = "UT-1");

[[nodiscard]] Manifest station_manifest(const InstanceId& id, const std::vector<std::string>& methods);

// --- generators -------------------------------------------------------------------------

[[nodiscard]] DataObject random_object(Rng& rng, std::size_t max_value = 256);
[[nodiscard]] Frame random_frame(Rng& rng, std::size_t max_payload = 4096);
[[nodiscard]] std::vector<std::vector<float>> random_grid(Rng& rng, std::size_t rows, std::size_t cols,
                                                          double density);
[[nodiscard]] DataObject grid_object(const std::vector<std::vector<float>>& grid);
[[nodiscard]] CellSet random_cells(Rng& rng, double density);

// --- oracles ----------------------------------------------------------------------------
// Each one computes the same answer as a library routine by an unrelated,
// deliberately naive method.

/// Connected components by repeated label relaxation until nothing changes.
[[nodiscard]] std::vector<Indication> oracle_indications(const std::vector<std::vector<float>>& grid, double floor);

/// Worklist by sorting full (priority, due, id) keys.
[[nodiscard]] std::vector<std::string> oracle_worklist(std::vector<InspectionOrder> orders);

/// Query by reading chain.log line order and decoding every object file.
[[nodiscard]] std::vector<std::string> oracle_query(const std::filesystem::path& store, const QueryCriteria& c);

/// Coverage by walking all 168 cells.
[[nodiscard]] CellSet oracle_gaps(const CellSet& required, const std::vector<ComponentLocus>& loci);

// --- negative paths ---------------------------------------------------------------------

struct NegativeCase {
  std::string operation;
  Errc expected;
  std::function<void()> trigger;
};

/// One entry per declared error of every operation.
[[nodiscard]] std::vector<NegativeCase> negative_cases();

/// Runs the case; empty on success, else what went wrong.
[[nodiscard]] std::string check_negative_case(const NegativeCase& c);

}  // namespace nde4::test
