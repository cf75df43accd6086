#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli/commands.hpp"

using namespace benjamin;
using namespace benjamin::cli;
namespace fs = std::filesystem;

namespace {

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.ini");
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("benjamin-test-" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kGenerate = R"(
[scenario]
kind = generate
[equation]
normalized = true
r = 0.5
m = 1
q = 2
gamma_tilde = 0.5
[grid]
l = 64
N = 512
)";

}  // namespace

TEST(Config, ParsesSectionsAndDefaults) {
  const auto cfg = parse(std::string(kGenerate) + "[solver]\nstop_mode = sfe\nmpe = false\n[output]\nformats = csv, json\n");
  EXPECT_EQ(*cfg.scenario.kind, "generate");
  EXPECT_TRUE(cfg.equation.normalized);
  EXPECT_EQ(cfg.grid.n, 512);
  EXPECT_EQ(cfg.solver.stop_mode, StopMode::sfe);
  EXPECT_FALSE(cfg.solver.accel.has_value());
  EXPECT_TRUE(cfg.output.json);
  EXPECT_EQ(cfg.echo.at("equation.gamma_tilde"), "0.5");
  EXPECT_EQ(cfg.scenario.min_separation, 10.0);
}

TEST(Config, Rejections) {
  auto bad = [](const std::string& text) {
    std::istringstream in(text);
    EXPECT_THROW(parse_config(in, "bad.ini"), ConfigError) << text;
  };
  bad("[equations]\nr = 0.5\n");
  bad("[equation]\nradius = 1\n");
  bad("[equation]\nr = abc\n");
  bad("[equation]\ngamma = 1\ngamma_tilde = 0.5\n");
  bad("[equation]\nnormalized = true\nc_s = 1\ngamma_tilde = 0.5\n");
  bad("[equation]\nnormalized = true\n");
  bad("[solver]\nstop_mode = sometimes\n");
  bad("[evolve]\ndt = 0.1, -0.2\n");
  bad("[output]\nformats = csv, xml\n");
}

TEST(Manifest, Sha256OfKnownString) {
  const auto d = fresh_dir("sha");
  fs::create_directories(d);
  std::ofstream(d / "abc.txt") << "abc";
  EXPECT_EQ(sha256_hex(d / "abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove_all(d);
}

TEST(Manifest, ForeignFileAndRerunCleanup) {
  const auto d = fresh_dir("outdir");
  {
    OutputDir out(d);
    out.write("a.txt", [](std::ostream& os) { os << "one"; });
    out.write("sub/b.txt", [](std::ostream& os) { os << "two"; });
    RunManifest man;
    man.command = "generate";
    man.finalize(out);
  }
  {
    // a rerun clears what the earlier manifest lists
    OutputDir again(d);
    EXPECT_FALSE(fs::exists(d / "a.txt"));
    EXPECT_FALSE(fs::exists(d / "sub/b.txt"));
  }
  std::ofstream(d / "notes.txt") << "mine";
  EXPECT_THROW(OutputDir{d}, OutputError);
  EXPECT_TRUE(fs::exists(d / "notes.txt"));
  fs::remove_all(d);
}

TEST(Run, GenerateWritesCompleteManifest) {
  const auto d = fresh_dir("generate");
  std::ostringstream log;
  ASSERT_EQ(run_command("generate", parse(kGenerate), d, 1, log), exit_ok) << log.str();
  const auto man = nlohmann::json::parse(slurp(d / "manifest.json"));
  EXPECT_EQ(man.at("format"), "benjamin-manifest 1");
  EXPECT_EQ(man.at("exit_code"), 0);
  EXPECT_FALSE(man.at("partial").get<bool>());
  std::set<std::string> listed;
  for (const auto& f : man.at("files")) {
    const std::string rel = f.at("path");
    listed.insert(rel);
    EXPECT_EQ(f.at("sha256"), sha256_hex(d / rel)) << rel;
    EXPECT_EQ(f.at("bytes").get<std::uintmax_t>(), fs::file_size(d / rel));
  }
  for (const char* name : {"profile.txt", "trace.csv", "phase.csv"}) EXPECT_TRUE(listed.count(name)) << name;
  for (const auto& e : fs::recursive_directory_iterator(d)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") {
      EXPECT_TRUE(listed.count(fs::relative(e.path(), d).generic_string())) << e.path();
    }
  }
  fs::remove_all(d);
}

TEST(Run, GenerateIsDeterministic) {
  const auto a = fresh_dir("det-a"), b = fresh_dir("det-b");
  std::ostringstream log;
  ASSERT_EQ(run_command("generate", parse(kGenerate), a, 1, log), exit_ok);
  ASSERT_EQ(run_command("generate", parse(kGenerate), b, 1, log), exit_ok);
  for (const char* name : {"profile.txt", "trace.csv", "phase.csv"})
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, ExitCodes) {
  std::ostringstream log;
  const auto d = fresh_dir("codes");
  const std::string general = R"(
[equation]
r = 0.5
m = 1
q = 2
delta = 1
c_s = 0.75
[grid]
l = 64
N = 512
)";
  EXPECT_EQ(run_command("generate", parse(general), d, 1, log), exit_ok);
  EXPECT_EQ(run_command("generate", parse(std::string(kGenerate)), d / "x", 1, log), exit_ok);

  const auto inadmissible = parse(std::string(general).replace(general.find("c_s"), 0, "gamma = 1.8\n"));
  EXPECT_EQ(run_command("generate", inadmissible, d / "inadm", 1, log), exit_inadmissible);
  const auto m = nlohmann::json::parse(slurp(d / "inadm" / "manifest.json"));
  EXPECT_EQ(m.at("exit_code"), exit_inadmissible);
  EXPECT_NE(m.at("message").get<std::string>().find("gamma_max"), std::string::npos);

  const auto stuck = parse(std::string(kGenerate) + "[solver]\nmax_iters = 2\nmpe = false\n");
  EXPECT_EQ(run_command("generate", stuck, d / "stuck", 1, log), exit_nonconvergence);

  const auto diverge = parse(general + "[evolve]\ndt = 0.5\nt_end = 2\nstage_max_sweeps = 2\n");
  EXPECT_EQ(run_command("evolve", diverge, d / "div", 1, log), exit_divergence);
  EXPECT_TRUE(nlohmann::json::parse(slurp(d / "div" / "manifest.json")).at("partial").get<bool>());

  EXPECT_EQ(run_command("evolve", parse(kGenerate), d / "mismatch", 1, log), exit_usage);
  EXPECT_EQ(run_command("teleport", parse(kGenerate), d / "unknown", 1, log), exit_usage);
  fs::remove_all(d);
}

TEST(Run, DispersionReport) {
  const auto d = fresh_dir("disp");
  std::ostringstream log;
  const auto cfg = parse("[scenario]\nkind = dispersion\n[equation]\nr = 0.5\nm = 1\nq = 2\ngamma = 1.6\nc_s = 0.75\n");
  ASSERT_EQ(run_command("dispersion", cfg, d, 1, log), exit_ok) << log.str();
  bool found = false;
  for (const auto& e : fs::directory_iterator(d)) {
    if (e.path().extension() != ".json" || e.path().filename() == "manifest.json") continue;
    const auto j = nlohmann::json::parse(slurp(e.path()));
    if (j.contains("regime")) {
      EXPECT_EQ(j.at("regime"), "two-roots");
      EXPECT_NEAR(j.at("gamma_star").get<double>(), 1.5, 1e-12);
      found = true;
    }
  }
  EXPECT_TRUE(found);
  fs::remove_all(d);
}
