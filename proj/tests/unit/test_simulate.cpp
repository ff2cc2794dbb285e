#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hqnet/error.h"
#include "hqnet/scenario.h"
#include "hqnet/simulate.h"

using namespace hqnet;

namespace {

ScenarioConfig quiet() {
  ScenarioConfig c = parse_scenario("");
  c.memory.enabled = false;
  c.link.enabled = false;
  c.gating.enabled = false;
  c.run.duration_s = 0.05;
  c.run.storage_duty = 1.0;
  return c;
}

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("no sources give an empty stream") {
    auto c = quiet();
    c.source.model.pair_rate_cps = 0.0;
    c.source.model.herald_singles_cps = 0.0;
    c.source.model.signal_singles_cps = 0.0;
    CHECK(generate(c).events.empty());
  }

  TEST_CASE("identical seeds give identical streams under any job count") {
    auto c = parse_scenario("");
    c.run.duration_s = 0.05;
    c.memory.noise_rate_cps = 500.0;
    c.detectors.signal_dark_cps = 300.0;
    const auto one = generate(c, {1});
    const auto three = generate(c, {3});
    CHECK(one.events == three.events);
    CHECK(one.metadata == three.metadata);
    CHECK(one.is_sorted());
    c.run.seed += 1;
    CHECK(generate(c).events != one.events);
  }

  TEST_CASE("metadata records hash, seed and live time") {
    auto c = parse_scenario("");
    c.run.duration_s = 0.01;
    c.run.seed = 99;
    const auto s = generate(c);
    CHECK(s.metadata.scenario_hash == scenario_hash(c));
    CHECK(s.metadata.seed == 99);
    CHECK(s.metadata.duration_s == 0.01);
    CHECK(s.metadata.live_time_s == doctest::Approx(0.01 * 0.476).epsilon(1e-3));
  }

  TEST_CASE("pair and singles rates converge") {
    auto c = quiet();
    c.run.duration_s = 0.2;
    const auto s = generate(c);
    const double t = derive(c).live_time_s;
    const double heralds = static_cast<double>(s.count(kHeraldChannel));
    const double signals = static_cast<double>(s.count(kSignalChannel));
    CHECK(std::abs(heralds - 423e3 * t) < 4.0 * std::sqrt(423e3 * t));
    CHECK(std::abs(signals - 2333e3 * t) < 4.0 * std::sqrt(2333e3 * t));
  }

  TEST_CASE("no signal passes a closed optical gate") {
    auto c = quiet();
    c.gating.enabled = true;
    c.gating.window.tau_d_us = 0.3;
    const auto s = generate(c);
    const double cycle = c.gating.window.cycle_us() * 1e6;
    std::size_t signals = 0;
    for (const auto& e : s.events) {
      const double phase = std::fmod(static_cast<double>(e.timestamp_ps), cycle);
      if (e.channel == kSignalChannel) {
        ++signals;
        CHECK(phase >= 0.3e6 - 1.0);
        CHECK(phase < 1.1e6 + 1.0);
      } else if (e.channel == kHeraldChannel) {
        CHECK(phase < 0.8e6);
      }
    }
    CHECK(signals > 0);
  }

  TEST_CASE("gated heralds are a subset of the raw heralds") {
    auto c = quiet();
    c.gating.enabled = true;
    c.detectors.emit_raw_herald = true;
    const auto s = generate(c);
    const auto raw = s.channel_times(kRawHeraldChannel);
    const auto gated = s.channel_times(kHeraldChannel);
    CHECK(gated.size() < raw.size());
    CHECK(std::includes(raw.begin(), raw.end(), gated.begin(), gated.end()));
  }

  TEST_CASE("echoes sit at the storage time within five envelope widths") {
    auto c = parse_scenario("");
    c.memory.afc.comb_spacing_mhz = 0.99;
    c.source.model.herald_singles_cps = c.source.model.pair_rate_cps;
    c.source.model.signal_singles_cps = c.source.model.pair_rate_cps;
    c.link.enabled = false;
    c.memory.efficiency = 0.5;
    c.memory.polarization_factor = 1.0;
    c.run.duration_s = 0.2;
    const auto d = derive(c);
    const auto s = generate(c);
    const double sigma = d.echo_fwhm_ns * 1e3 / 2.3548200450309493;
    const double tau_afc = d.tau_afc_us * 1e6;
    const double cycle = d.cycle_us * 1e6;
    std::size_t late = 0;
    for (const auto& e : s.events) {
      if (e.channel != kSignalChannel) continue;
      const double phase = std::fmod(static_cast<double>(e.timestamp_ps), cycle);
      if (phase < d.t_on_us * 1e6 + 5.0 * 320.0) continue;
      ++late;
      // Echo of a pair emitted in [0, t_on) arrives within tau_afc + [0, t_on) +- 5 sigma.
      CHECK(phase >= tau_afc - 5.0 * sigma - 5.0 * 320.0);
      CHECK(phase < tau_afc + d.t_on_us * 1e6 + 5.0 * sigma + 5.0 * 320.0);
    }
    CHECK(late > 0);
  }

  TEST_CASE("mode schedule") {
    auto c = parse_scenario("");
    c.gating.window.t_on_us = 0.74;
    c.gating.window.t_off_us = 1.26;
    CHECK(max_modes(0.74, 20.0) == 37);
    CHECK(max_modes(0.8, 20.0) == 40);
    const auto s = multimode_windows(c, 37);
    CHECK(s.modes == 37);
    CHECK(s.mode_of(0).value() == 0);
    CHECK(s.mode_of(719'999).value() == 35);
    CHECK(s.mode_of(739'999).value() == 36);
    CHECK_FALSE(s.mode_of(740'000).has_value());
    CHECK(s.mode_of(2'000'000 + 25'000).value() == 1);
    const auto one = multimode_windows(c, 1);
    CHECK(one.mode_of(19'999).value() == 0);
    CHECK_FALSE(one.mode_of(20'000).has_value());
    try {
      multimode_windows(c, 38);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::window_overflow);
    }
  }

  TEST_CASE("g2 target singles") {
    auto c = quiet();
    c.source.singles_model = SinglesModel::g2_target;
    const auto d = derive(c);
    CHECK(d.signal_singles_cps == doctest::Approx(46e3 * 1e9 / (2.0 * 0.32) / (129.0 * 423e3)).epsilon(1e-9));
    c.source.model.g2_cross_max = 1e6;
    CHECK_THROWS_AS(derive(c), Error);
  }
}
