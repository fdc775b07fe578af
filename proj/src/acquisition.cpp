/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
// Synthetic acquisition and evaluation for the scenario engine.

#include <algorithm>
#include <bit>
#include <cstring>
#include <deque>

#include <fmt/format.h>

#include "nde4/plantsim.hpp"
#include "nde4/semantics.hpp"

namespace nde4 {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return Rng(seed ^ splitmix64(h));
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

void NoiseModel::validate() const {
  auto fail = [](std::string_view why) { throw Error(Errc::ConfigInvalid, fmt::format("noise model: {}", why)); };
  if (!(noise_max >= 0.0 && noise_max <= 100.0)) fail("noise_max outside [0, 100]");
  if (!(detection_floor > 0.0 && detection_floor <= 100.0)) fail("detection floor outside (0, 100]");
  if (!(peak_min <= peak_max && peak_min >= 0.0 && peak_max <= 100.0)) fail("peak range outside [0, 100]");
  if (!(shoulder > 0.0 && shoulder <= 1.0)) fail("shoulder outside (0, 1]");
  if (max_extent == 0) fail("max_extent must be at least 1");
}

namespace {

struct Grid {
  std::uint16_t rows;
  std::uint16_t cols;
  std::vector<float> cells;

  float& at(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
};

void paint(Grid& g, std::size_t r0, std::size_t c0, std::size_t h, std::size_t w, std::size_t pr, std::size_t pc,
           float peak, double shoulder) {
  const auto side = static_cast<float>(shoulder * peak);
  for (std::size_t r = r0; r < std::min<std::size_t>(r0 + h, g.rows); ++r) {
    for (std::size_t c = c0; c < std::min<std::size_t>(c0 + w, g.cols); ++c) {
      g.at(r, c) = std::max(g.at(r, c), (r == pr && c == pc) ? peak : side);
    }
  }
}

Bytes u16_bytes(std::uint16_t v) {
  Bytes b;
  put_u16le(b, v);
  return b;
}

}  // namespace

DataObject acquire(const Procedure& procedure, const AcquisitionContext& ctx, Rng& rng, const NoiseModel& noise) {
  Grid g{procedure.rows, procedure.cols, std::vector<float>(std::size_t{procedure.rows} * procedure.cols)};
  for (auto& cell : g.cells) cell = static_cast<float>(rng.uniform(0.0, noise.noise_max));

  if (ctx.defects) {
    for (const auto& d : *ctx.defects) paint(g, d.row, d.col, d.height, d.width, d.row, d.col, d.peak, noise.shoulder);
  } else {
    const auto k = rng.below(noise.max_defects + 1ULL);
    for (std::uint64_t i = 0; i < k; ++i) {
      const auto h = std::min<std::uint64_t>(1 + rng.below(noise.max_extent), g.rows);
      const auto w = std::min<std::uint64_t>(1 + rng.below(noise.max_extent), g.cols);
      const auto r0 = rng.below(g.rows - h + 1);
      const auto c0 = rng.below(g.cols - w + 1);
      const auto pr = r0 + rng.below(h);
      const auto pc = c0 + rng.below(w);
      const auto peak = static_cast<float>(rng.uniform(noise.peak_min, noise.peak_max));
      paint(g, r0, c0, h, w, pr, pc, peak, noise.shoulder);
    }
  }

  DataObject obj;
  obj.merge(ctx.seed);
  obj.set_text(tags::kObjectUid, ctx.object_uid);
  obj.set_text(tags::kCreated, ctx.created.str());
  obj.set_text(tags::kMethod, procedure.method);
  obj.set_text(tags::kComponentSerial, ctx.component_serial);
  obj.set_text(tags::kProcedureId, procedure.procedure_id);
  if (ctx.device) {
    obj.set_text(tags::kDevice, ctx.device->canonical());
    obj.set_text(tags::kCalibrationDue,
                 DateTime::from_epoch_seconds(ctx.created.to_epoch_seconds() + 365LL * 86400).str());
  }
  obj.set(tags::kRows, u16_bytes(g.rows));
  obj.set(tags::kCols, u16_bytes(g.cols));
  obj.set(tags::kAmplitudeGrid, encode_value({ValueRep::F32ARRAY, g.cells}));
  return obj;
}

std::vector<Indication> evaluate(const DataObject& obj, const Procedure& procedure, double detection_floor) {
  const Element* rows_el = obj.find(tags::kRows);
  const Element* cols_el = obj.find(tags::kCols);
  const Element* grid_el = obj.find(tags::kAmplitudeGrid);
  if (rows_el == nullptr || cols_el == nullptr || grid_el == nullptr) {
    throw Error(Errc::GridShapeMismatch, "object lacks rows, cols or amplitude grid");
  }
  if (rows_el->value.size() != 2 || cols_el->value.size() != 2) {
    throw Error(Errc::GridShapeMismatch, "rows/cols are not U16 values");
  }
  const std::uint16_t rows = get_u16le(rows_el->value);
  const std::uint16_t cols = get_u16le(cols_el->value);
  if (rows != procedure.rows || cols != procedure.cols) {
    throw Error(Errc::GridShapeMismatch, fmt::format("grid {}x{} but procedure '{}' expects {}x{}", rows, cols,
                                                     procedure.procedure_id, procedure.rows, procedure.cols));
  }
  const std::size_t n = std::size_t{rows} * cols;
  if (grid_el->value.size() != n * 4) {
    throw Error(Errc::GridShapeMismatch,
                fmt::format("amplitude grid holds {} bytes, {}x{} needs {}", grid_el->value.size(), rows, cols, n * 4));
  }
  std::vector<float> amp(n);
  std::memcpy(amp.data(), grid_el->value.data(), n * 4);

  std::vector<Indication> out;
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start] || amp[start] < detection_floor) continue;
    seen[start] = true;
    queue.push_back(start);
    std::size_t best = start;
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      if (amp[i] > amp[best] || (amp[i] == amp[best] && i < best)) best = i;
      const std::size_t r = i / cols;
      const std::size_t c = i % cols;
      auto visit = [&](std::size_t j) {
        if (!seen[j] && amp[j] >= detection_floor) {
          seen[j] = true;
          queue.push_back(j);
        }
      };
      if (r > 0) visit(i - cols);
      if (r + 1 < rows) visit(i + cols);
      if (c > 0) visit(i - 1);
      if (c + 1 < cols) visit(i + 1);
    }
    out.push_back({static_cast<std::uint16_t>(best / cols), static_cast<std::uint16_t>(best % cols), amp[best]});
  }
  return out;
}

}  // namespace nde4
