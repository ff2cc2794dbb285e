#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "hqnet/error.h"
#include "hqnet/scenario.h"
#include "hqnet/sweep.h"

using namespace hqnet;

namespace {

const std::filesystem::path kScenarios = HQNET_SOURCE_DIR "/scenarios";

}

TEST_SUITE("sweep") {
  TEST_CASE("metric names") {
    for (auto m : {SweepMetric::echo_rate, SweepMetric::g2_he, SweepMetric::g2_hs, SweepMetric::efficiency})
      CHECK(parse_metric(to_string(m)) == m);
    CHECK_THROWS_AS(parse_metric("rate"), Error);
  }

  TEST_CASE("seeds differ per point and repeat") {
    CHECK(sweep_seed(1, 0, 0) != sweep_seed(1, 0, 1));
    CHECK(sweep_seed(1, 0, 0) != sweep_seed(1, 1, 0));
    CHECK(sweep_seed(1, 2, 3) == sweep_seed(1, 2, 3));
  }

  TEST_CASE("expected fiber sweep follows the transmission") {
    const auto cfg = load_scenario(kScenarios / "fig4de_fiber.toml");
    SweepSpec spec{"link.length_km", {0.0, 10.0, 25.0, 49.2}, 1, SweepMetric::echo_rate, SweepMode::expected};
    const auto rows = run_sweep(spec, cfg);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows)
      CHECK(r.mean / rows[0].mean == doctest::Approx(std::pow(10.0, -0.032 * r.value)).epsilon(1e-9));
    spec.metric = SweepMetric::g2_he;
    const auto g2 = run_sweep(spec, cfg);
    // Detector dark counts do not scale with the fiber, so g2 sags slightly with length.
    CHECK(g2.back().mean < g2.front().mean);
    CHECK(g2.back().mean == doctest::Approx(g2.front().mean).epsilon(0.05));
  }

  TEST_CASE("single value and one repeat give one row") {
    auto cfg = load_scenario(kScenarios / "fig3b_echo.toml");
    cfg.run.duration_s = 2.0;
    const SweepSpec spec{"link.length_km", {0.0}, 1, SweepMetric::echo_rate, SweepMode::simulate};
    const auto rows = run_sweep(spec, cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].repeats == 1);
    const auto csv = sweep_csv(spec, rows);
    CHECK(csv.rfind("link.length_km,echo_rate_mean,echo_rate_stderr,repeats\n", 0) == 0);
  }

  TEST_CASE("bad keys fail before any work") {
    const auto cfg = load_scenario(kScenarios / "fig3b_echo.toml");
    CHECK_THROWS_AS(run_sweep({"link.nope", {1.0}, 1, SweepMetric::echo_rate, SweepMode::expected}, cfg), Error);
    CHECK_THROWS_AS(run_sweep({"link.length_km", {}, 1, SweepMetric::echo_rate, SweepMode::expected}, cfg), Error);
  }

  TEST_CASE("point failures carry the point index") {
    const auto cfg = load_scenario(kScenarios / "fig3b_echo.toml");
    try {
      run_sweep({"gating.t_on_us", {0.8, 1.1}, 1, SweepMetric::echo_rate, SweepMode::expected}, cfg);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("sweep point 1") != std::string::npos);
    }
  }

  TEST_CASE("trade-off table from the operating points") {
    const auto cfg = load_scenario(kScenarios / "fig3b_echo.toml");
    SweepSpec spec{"source.delta2_MHz", {703.0, 753.0, 803.0, 853.0, 903.0}, 1, SweepMetric::echo_rate,
                   SweepMode::expected};
    const auto rate = run_sweep(spec, cfg);
    spec.metric = SweepMetric::g2_he;
    const auto g2 = run_sweep(spec, cfg);
    CHECK(rate.front().mean == doctest::Approx(4.3).epsilon(1e-3));
    CHECK(g2.front().mean == doctest::Approx(2.78).epsilon(1e-3));
    CHECK(rate.back().mean == doctest::Approx(1.5).epsilon(1e-3));
    CHECK(g2.back().mean == doctest::Approx(4.94).epsilon(1e-3));
    for (std::size_t i = 1; i < rate.size(); ++i) {
      CHECK(rate[i].mean < rate[i - 1].mean);
      CHECK(g2[i].mean > g2[i - 1].mean);
    }
  }
}
