#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <vector>

#include "hqnet/cli.h"
#include "hqnet/timetag.h"

using namespace hqnet;

namespace {

const std::string kScenarios = HQNET_SOURCE_DIR "/scenarios";

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hqnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch() {
  auto dir = std::filesystem::temp_directory_path() / "hqnet_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate then analyze") {
    const auto dir = scratch();
    const auto stream = (dir / "echo.hqtt").string();
    auto r = cli({"simulate", "--scenario", kScenarios + "/fig3b_echo.toml", "--out", stream, "--seed", "11",
                  "--duration", "5"});
    REQUIRE(r.code == 0);
    const auto meta = read_metadata(metadata_path(stream));
    CHECK(meta.seed == 11);
    CHECK(meta.tool_version == tool_version());
    CHECK(meta.duration_s == 5.0);

    r = cli({"analyze", "--stream", stream, "--scenario", kScenarios + "/fig3b_echo.toml", "--json",
             (dir / "a.json").string(), "--csv-prefix", (dir / "a").string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "a.json"));
    CHECK(j["scenario_hash"] == meta.scenario_hash);
    CHECK(j.contains("source"));
    CHECK(j.contains("echo"));
    CHECK(slurp(dir / "a_echo.csv").rfind("# scenario_hash=" + meta.scenario_hash, 0) == 0);
  }

  TEST_CASE("analyze refuses a different scenario unless forced") {
    const auto dir = scratch();
    const auto stream = (dir / "mismatch.hqtt").string();
    REQUIRE(cli({"simulate", "--scenario", kScenarios + "/fig3b_echo.toml", "--out", stream, "--seed", "2",
                 "--duration", "1"})
                .code == 0);
    const std::vector<std::string> args{"analyze", "--stream", stream, "--scenario",
                                        kScenarios + "/fig4de_fiber.toml", "--json", "-"};
    auto r = cli(args);
    CHECK(r.code == kExitMismatch);
    CHECK(r.err.find("does not match") != std::string::npos);
    auto forced = args;
    forced.push_back("--force");
    CHECK(cli(forced).code == 0);
  }

  TEST_CASE("gating violation exits with a config error") {
    const auto dir = scratch();
    auto text = slurp(kScenarios + "/fig3b_echo.toml");
    text.replace(text.find("t_on_us = 0.8"), 13, "t_on_us = 1.1");
    const auto bad = dir / "bad.toml";
    std::ofstream(bad) << text;
    const auto r = cli({"simulate", "--scenario", bad.string(), "--out", (dir / "x.hqtt").string(), "--seed", "1"});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("requirement on the gating parameters") != std::string::npos);
  }

  TEST_CASE("missing output directory exits with an I/O error") {
    const auto r = cli({"simulate", "--scenario", kScenarios + "/fig1c_source.toml", "--out",
                        "/nonexistent-dir/out.hqtt", "--seed", "1", "--duration", "0.01"});
    CHECK(r.code == kExitIo);
  }

  TEST_CASE("omitted seed is drawn and logged") {
    const auto dir = scratch();
    const auto r = cli({"simulate", "--scenario", kScenarios + "/fig1c_source.toml", "--out",
                        (dir / "entropy.hqtt").string(), "--duration", "0.01"});
    CHECK(r.code == 0);
    CHECK(r.err.find("drawn from entropy") != std::string::npos);
  }

  TEST_CASE("usage errors") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"simulate"}).code == kExitUsage);
    CHECK(cli({"--help"}).code == 0);
  }

  TEST_CASE("design-afc") {
    auto r = cli({"design-afc", "--depth", "4.5", "--background-depth", "0"});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["optimal_finesse"].get<double>() == doctest::Approx(4.02).epsilon(0.0025));
    CHECK(j["optimal_efficiency"].get<double>() == doctest::Approx(0.263).epsilon(0.004));
    CHECK(j["warning"] == "");
    r = cli({"design-afc", "--bandwidth", "45", "--input-fwhm", "43"});
    j = nlohmann::json::parse(r.out);
    CHECK(j["bandwidth_penalty"].get<double>() > 0.1);
    r = cli({"design-afc", "--bandwidth", "40", "--input-fwhm", "43"});
    CHECK(nlohmann::json::parse(r.out)["warning"] != "");
    CHECK(cli({"design-afc", "--bandwidth", "0.5", "--spacing", "1"}).code == kExitConfig);
  }

  TEST_CASE("levels and match") {
    const auto dir = scratch();
    auto r = cli({"levels", "--field", "1", "--out-prefix", (dir / "lv").string()});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["nearest_central_spacing_MHz"].get<double>() == doctest::Approx(10.9).epsilon(0.02));
    CHECK(std::filesystem::exists(dir / "lv_band.csv"));
    r = cli({"match", "--scenario", kScenarios + "/fig3b_echo.toml", "--out-prefix", (dir / "m").string()});
    REQUIRE(r.code == 0);
    j = nlohmann::json::parse(r.out);
    CHECK(j["in_band_fraction"].get<double>() > 0.2);
    CHECK(j["in_band_fraction"].get<double>() < 0.25);
    CHECK(std::filesystem::exists(dir / "m_spectrum.csv"));
  }

  TEST_CASE("expected sweep writes a table") {
    const auto dir = scratch();
    const auto r = cli({"sweep", "--scenario", kScenarios + "/fig3b_echo.toml", "--param", "source.delta2_MHz",
                        "--values", "703,903", "--metric", "g2_he", "--expected", "--out", "-"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("source.delta2_MHz,g2_he_mean,g2_he_stderr,repeats") != std::string::npos);
    CHECK(r.out.find("# scenario_hash=") == 0);
  }
}
