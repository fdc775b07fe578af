/*
 * Copyright (c) The nde4 Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "support.hpp"

namespace nde4::test {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
};

/// Runs the CLI through the shell; output is stdout followed by stderr.
Outcome cli(const std::string& args, const std::string& env = {}) {
  const std::string cmd = fmt::format("{} '{}' {} 2>&1", env, NDE4_CLI, args);
  Outcome r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string src(std::string_view rel) { return (source_dir() / rel).string(); }

bool has(const Outcome& r, std::string_view text) { return r.out.find(text) != std::string::npos; }

TEST(Cli, HelpAndUsage) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  TempDir out("cli");
  EXPECT_EQ(cli(fmt::format("sim run --out '{}'", (out / "o").string())).code, 2);
  EXPECT_EQ(cli(fmt::format("sim run --scenario '{}'", src("scenarios/demo.scen"))).code, 2);
  EXPECT_EQ(cli("--format yaml tables dict").code, 2);
}

TEST(Cli, SimRunDemo) {
  TempDir out("cli");
  const std::string dir = (out / "run").string();
  const Outcome r = cli(fmt::format("sim run --scenario '{}' --seed 42 --out '{}'", src("scenarios/demo.scen"), dir));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(has(r, "reported=2/2")) << r.out;
  EXPECT_TRUE(fs::exists(fs::path(dir) / "run.trace"));
  EXPECT_TRUE(fs::exists(fs::path(dir) / "report.json"));

  // A second run into the same directory is refused unless forced.
  EXPECT_EQ(cli(fmt::format("sim run --scenario '{}' --out '{}'", src("scenarios/demo.scen"), dir)).code, 3);
  EXPECT_EQ(cli(fmt::format("sim run --scenario '{}' --out '{}' --force", src("scenarios/demo.scen"), dir)).code, 0);

  const Outcome json = cli(fmt::format("--format json sim run --scenario '{}' --out '{}' --force",
                                       src("scenarios/demo.scen"), dir));
  EXPECT_EQ(json.code, 0);
  EXPECT_TRUE(has(json, "\"orders_total\": 2")) << json.out;

  const std::string data = fmt::format("NDE4_DATA_DIR='{}'", (fs::path(dir) / "archive" / "forge").string());
  const Outcome verify = cli("archive verify", data);
  EXPECT_EQ(verify.code, 0);
  EXPECT_TRUE(has(verify, "chain OK"));
  const Outcome ls = cli("archive ls", data);
  EXPECT_EQ(ls.code, 0);
  const std::string first_uid = ls.out.substr(0, ls.out.find('\n'));
  const Outcome dump = cli(fmt::format("archive dump {}", first_uid), data);
  EXPECT_EQ(dump.code, 0);
  EXPECT_TRUE(has(dump, "order_id (0020,0001): ORD-7")) << dump.out;
  EXPECT_EQ(cli("archive dump obj-nope", data).code, 3);
}

TEST(Cli, SimRunFindingsAndDeadlock) {
  TempDir out("cli");
  const Outcome gap =
      cli(fmt::format("sim run --scenario '{}' --out '{}'", src("scenarios/gap.scen"), (out / "gap").string()));
  EXPECT_EQ(gap.code, 1) << gap.out;
  EXPECT_TRUE(has(gap, "CONNECTED_WORLD"));

  const Outcome dead = cli(
      fmt::format("sim run --scenario '{}' --out '{}'", src("scenarios/nosov-chain.scen"), (out / "dead").string()));
  EXPECT_EQ(dead.code, 3) << dead.out;
  EXPECT_TRUE(has(dead, "ScenarioDeadlock"));
  EXPECT_TRUE(fs::exists(out / "dead" / "run.trace"));

  const Outcome tamper = cli(
      fmt::format("sim run --scenario '{}' --out '{}'", src("scenarios/tamper.scen"), (out / "tamper").string()));
  EXPECT_EQ(tamper.code, 1);
  const Outcome verify =
      cli(fmt::format("archive --data-dir '{}' verify", (out / "tamper" / "archive" / "forge").string()));
  EXPECT_EQ(verify.code, 1);
  EXPECT_TRUE(has(verify, "bad at index ")) << verify.out;

  const Outcome fault = cli(fmt::format("sim run --scenario '{}' --out '{}' --fault DROP_GATEWAY",
                                        src("scenarios/demo.scen"), (out / "drop").string()));
  EXPECT_EQ(fault.code, 3);
  const Outcome wrong = cli(fmt::format("sim run --scenario '{}' --out '{}' --fault POLICY_OVERREAD",
                                        src("scenarios/demo.scen"), (out / "na").string()));
  EXPECT_EQ(wrong.code, 3);
  EXPECT_TRUE(has(wrong, "FaultNotApplicable"));
}

TEST(Cli, ArchiveNeedsAnExistingStore) {
  TempDir out("cli");
  EXPECT_EQ(cli(fmt::format("archive --data-dir '{}' verify", (out / "none").string())).code, 3);
  EXPECT_FALSE(fs::exists(out / "none"));
}

TEST(Cli, ValidateFixtures) {
  EXPECT_EQ(cli(fmt::format("validate shell '{}'", src("tests/fixtures/station.aas"))).code, 0);
  EXPECT_EQ(cli(fmt::format("validate shell '{}'", src("tests/fixtures/plant.aas"))).code, 0);
  const Outcome dangling = cli(fmt::format("validate shell '{}' --known '{}'", src("tests/fixtures/plant.aas"),
                                           src("tests/fixtures/station.aas")));
  EXPECT_EQ(dangling.code, 1);
  EXPECT_TRUE(has(dangling, "DanglingChild"));
  const Outcome missing = cli(fmt::format("validate shell '{}'", src("tests/fixtures/missing-id.aas")));
  EXPECT_EQ(missing.code, 1);
  EXPECT_TRUE(has(missing, "MissingHeaderId"));
  const Outcome bad_json = cli(fmt::format("validate shell '{}'", src("tests/fixtures/truncated.aas")));
  EXPECT_EQ(bad_json.code, 3);
  EXPECT_TRUE(has(bad_json, "ParseError at byte ")) << bad_json.out;

  EXPECT_EQ(cli(fmt::format("validate object '{}'", src("tests/fixtures/ut-ord7.ndeo"))).code, 0);
  const Outcome cut = cli(fmt::format("validate object '{}'", src("tests/fixtures/truncated.ndeo")));
  EXPECT_EQ(cut.code, 3);
  EXPECT_TRUE(has(cut, "TruncatedElement at byte ")) << cut.out;
  EXPECT_EQ(cli("validate object /nonexistent/x.ndeo").code, 3);
}

TEST(Cli, Rami) {
  const Outcome loc = cli("rami locate orders-bus");
  EXPECT_EQ(loc.code, 0);
  EXPECT_TRUE(has(loc, "INFORMATION/INST_PROD/PLANT"));
  EXPECT_FALSE(has(loc, "ENTERPRISE"));
  EXPECT_EQ(cli("rami locate warp-drive").code, 3);
  const Outcome gaps = cli("rami coverage --require 'COMMUNICATION/INST_USE/*' --component orders-bus gateway");
  EXPECT_EQ(gaps.code, 1);
  EXPECT_TRUE(has(gaps, "COMMUNICATION/INST_USE/CONNECTED_WORLD"));
  EXPECT_EQ(cli("rami coverage --require 'COMMUNICATION/INST_USE/*' --component orders-bus gateway sovereignty").code,
            0);
  const Outcome bad = cli("rami coverage --require 'NOPE/*/*'");
  EXPECT_EQ(bad.code, 3);
  EXPECT_TRUE(has(bad, "ParseError at byte 0"));
}

TEST(Cli, TablesMatchShippedData) {
  for (const auto& [cmd, file] : std::vector<std::pair<std::string, std::string>>{
           {"dict", "dict-v1.tsv"}, {"mapping", "mapping-v1.tsv"}, {"loci", "rami-loci.tsv"}}) {
    const Outcome r = cli("tables " + cmd);
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, read_file(source_dir() / "data" / file)) << cmd;
  }
}

TEST(Cli, OutputIsDeterministic) {
  EXPECT_EQ(cli("tables loci").out, cli("tables loci").out);
  EXPECT_EQ(cli(fmt::format("validate shell '{}'", src("tests/fixtures/plant.aas"))).out,
            cli(fmt::format("validate shell '{}'", src("tests/fixtures/plant.aas"))).out);
}

}  // namespace
}  // namespace nde4::test
