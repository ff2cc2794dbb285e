#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hqnet/analysis.h"
#include "hqnet/error.h"
#include "hqnet/rng.h"
#include "hqnet/source.h"

using namespace hqnet;

namespace {

TimeTagStream sorted(std::vector<TimeTag> events) {
  std::sort(events.begin(), events.end(), [](const TimeTag& a, const TimeTag& b) {
    return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps : a.channel < b.channel;
  });
  TimeTagStream s;
  s.events = std::move(events);
  s.metadata.duration_s = 1.0;
  return s;
}

TimeTagStream poisson_channels(std::uint64_t seed, double r1, double r2, double seconds) {
  Rng rng(seed);
  std::vector<TimeTag> ev;
  for (auto [ch, rate] : {std::pair{std::uint8_t{0}, r1}, std::pair{std::uint8_t{1}, r2}}) {
    for (double t = rng.exponential(1e12 / rate); t < seconds * 1e12; t += rng.exponential(1e12 / rate))
      ev.push_back({static_cast<std::uint64_t>(t), ch});
  }
  auto s = sorted(std::move(ev));
  s.metadata.duration_s = seconds;
  return s;
}

// Counts drawn around a flat background plus a two-sided exponential peak.
Histogram synthetic(std::uint64_t seed, double background, double g2, double tau_ps, double bin_ps) {
  auto h = Histogram::with_range(-20e3, 20e3, bin_ps, Axis::delay);
  std::mt19937_64 gen(seed);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double lo = h.bin_low(i);
    const double mean = background * (1.0 + (g2 - 1.0) * bin_average_shape(PeakFamily::two_sided_exponential,
                                                                            tau_ps, lo, lo + bin_ps));
    h.counts[i] = std::poisson_distribution<std::uint64_t>(mean)(gen);
  }
  h.acquisition_s = 1.0;
  return h;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("one pair lands in one bin") {
    const auto s = sorted({{1'000'000, 0}, {1'000'730, 1}});
    const auto h = coincidence_histogram(s, 0, 1, 50.0, 2000.0);
    CHECK(h.total() == 1);
    CHECK(h.counts[static_cast<std::size_t>(h.index_of(730.0))] == 1);
  }

  TEST_CASE("unsorted input is rejected") {
    TimeTagStream s;
    s.events = {{10, 0}, {5, 1}};
    try {
      coincidence_histogram(s, 0, 1, 1.0, 100.0);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unsorted_stream);
    }
  }

  TEST_CASE("streaming count equals all-pairs brute force") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      std::vector<TimeTag> ev;
      for (int i = 0; i < 10000; ++i)
        ev.push_back({rng.next() % 20'000'000, static_cast<std::uint8_t>(rng.next() % 3)});
      const auto s = sorted(ev);
      const double lo = -7000.0 - 13.0 * seed;
      const double hi = 9000.0;
      const auto h = coincidence_histogram(s, 0, 1, 37.0, lo, hi);
      std::vector<std::uint64_t> brute(h.size(), 0);
      for (const auto& a : s.events) {
        if (a.channel != 0) continue;
        for (const auto& b : s.events) {
          if (b.channel != 1) continue;
          const double d = static_cast<double>(b.timestamp_ps) - static_cast<double>(a.timestamp_ps);
          const auto i = h.index_of(d);
          if (i >= 0) ++brute[static_cast<std::size_t>(i)];
        }
      }
      CHECK(h.counts == brute);
    }
  }

  TEST_CASE("accidentals of independent channels") {
    const double r1 = 2e4;
    const double r2 = 5e4;
    const auto s = poisson_channels(3, r1, r2, 2.0);
    const auto h = coincidence_histogram(s, 0, 1, 1000.0, 1e6);
    const double expected = r1 * r2 * 2.0 * 1000e-12 * static_cast<double>(h.size());
    CHECK(std::abs(static_cast<double>(h.total()) - expected) < 3.0 * std::sqrt(expected));
    CHECK(h.acquisition_s == 2.0);
  }

  TEST_CASE("flat histogram gives g2 near one") {
    auto h = Histogram::with_range(-20e3, 20e3, 50.0, Axis::delay);
    std::mt19937_64 gen(4);
    for (auto& c : h.counts) c = std::poisson_distribution<std::uint64_t>(400.0)(gen);
    CrossG2Options o;
    o.peak_delay_ps = 0.0;
    o.search_half_width_ps = 200.0;
    o.peak_width_ps = 320.0;
    const auto r = cross_g2(h, o);
    CHECK(r.g2_max < 1.0 + 5.0 * std::max(r.g2_stderr, 0.02));
    CHECK(r.fit_kind == FitKind::flat);
  }

  TEST_CASE("synthetic peak of 130 is recovered") {
    int within = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto h = synthetic(seed, 20.0, 130.0, 320.0, 50.0);
      CrossG2Options o;
      o.peak_delay_ps = 0.0;
      o.search_half_width_ps = 2000.0;
      const auto r = cross_g2(h, o);
      CHECK(r.peak_family == PeakFamily::two_sided_exponential);
      CHECK(r.peak_width_ps == doctest::Approx(320.0).epsilon(0.1));
      if (std::abs(r.g2_max - 130.0) < 2.0 * r.g2_stderr) ++within;
    }
    CHECK(within >= 8);
  }

  TEST_CASE("empty background gives a lower bound") {
    auto h = Histogram::with_range(-20e3, 20e3, 50.0, Axis::delay);
    h.counts[h.size() / 2] = 50;
    h.counts[h.size() / 2 + 1] = 30;
    CrossG2Options o;
    o.peak_width_ps = 50.0;
    const auto r = cross_g2(h, o);
    CHECK(r.lower_bound);
    CHECK(r.g2_max > 1.0);
  }

  TEST_CASE("heralded autocorrelation") {
    Rng rng(8);
    std::vector<TimeTag> perfect;
    for (int i = 0; i < 20000; ++i) {
      const std::uint64_t t = 1000 + static_cast<std::uint64_t>(i) * 50'000;
      perfect.push_back({t, 0});
      perfect.push_back({t + 20, static_cast<std::uint8_t>(rng.uniform() < 0.5 ? 1 : 2)});
    }
    const auto zero = heralded_auto_g2(sorted(perfect), 0, 1, 2);
    CHECK(zero.g2 == 0.0);
    CHECK(zero.triples == 0);

    std::vector<TimeTag> coherent;
    for (int i = 0; i < 200000; ++i) {
      const std::uint64_t t = 1000 + static_cast<std::uint64_t>(i) * 50'000;
      coherent.push_back({t, 0});
      for (std::uint8_t arm : {std::uint8_t{1}, std::uint8_t{2}})
        for (auto n = rng.poisson(0.3); n > 0; --n)
          coherent.push_back({t - 100 + static_cast<std::uint64_t>(200.0 * rng.uniform()), arm});
    }
    const auto one = heralded_auto_g2(sorted(coherent), 0, 1, 2);
    CHECK(one.g2 == doctest::Approx(1.0).epsilon(0.05));
    CHECK_THROWS_AS(heralded_auto_g2(sorted({{1, 0}, {2, 1}}), 0, 1, 2), Error);
  }

  TEST_CASE("Cauchy-Schwarz ratio") {
    CHECK(cauchy_schwarz(130, 2, 2) == 4225.0);
    CHECK(cauchy_schwarz(2, 2, 2) == 1.0);
    CHECK(cauchy_schwarz(4.94, 2, 2) == doctest::Approx(6.1009));
    for (double k : {0.5, 2.0, 7.0})
      CHECK(cauchy_schwarz(3.0, 1.5, 2.5) * k * k == doctest::Approx(cauchy_schwarz(k * 3.0, 1.5, 2.5)));
    CHECK_THROWS_AS(cauchy_schwarz(1, 0, 2), Error);
  }

  TEST_CASE("time-bandwidth product") {
    CHECK(time_bandwidth_product(1.01, 8.4) == doctest::Approx(120.24).epsilon(1e-3));
    CHECK(time_bandwidth_product(0.0084, 8.4) == doctest::Approx(1.0));
    CHECK(time_bandwidth_product(3.0, 8.4) == doctest::Approx(357.14).epsilon(1e-3));
  }

  TEST_CASE("loss budget") {
    const auto ref = reference_loss_components();
    const auto b = loss_budget(ref);
    CHECK(b.total == doctest::Approx(5.3865e-5).epsilon(1e-4));
    CHECK(b.total == doctest::Approx(5.4e-5).epsilon(0.02));
    CHECK(b.internal == doctest::Approx(0.005));
    CHECK(b.partials.back() == b.total);
    auto shuffled = ref;
    std::reverse(shuffled.begin(), shuffled.end());
    std::rotate(shuffled.begin(), shuffled.begin() + 3, shuffled.end());
    CHECK(loss_budget(shuffled).total == doctest::Approx(b.total).epsilon(1e-14));
    CHECK(loss_budget({{"a", 1.0}, {"b", 1.0}}).total == 1.0);
    CHECK_THROWS_AS(loss_budget({{"bad", 1.5}}), Error);
    CHECK_THROWS_AS(loss_budget({{"bad", 0.0}}), Error);
  }

  TEST_CASE("noise budget arithmetic") {
    NoiseInputs in;
    in.efficiency = 0.0;
    const auto none = solve_noise_budget(in);
    CHECK(none.d_total == 0.0);
    CHECK(none.d_afc_plus_snspd == 0.0);

    in.echo_background_cps = 2e-3;
    in.source_background_cps = 10.0;
    in.efficiency = 1e-4;
    in.d_snspd_cps = 5e-4;
    const auto b = solve_noise_budget(in);
    CHECK(b.source_share == doctest::Approx(1e-4 * 10.0 * 10.0));
    CHECK(b.d_afc_plus_snspd == doctest::Approx(2e-3 - 1e-2));
    CHECK(b.d_afc == doctest::Approx(b.d_afc_plus_snspd - 5e-4));

    in.echo_background_cps = -1.0;
    try {
      solve_noise_budget(in);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::model_inconsistent);
    }
    CHECK(background_from_peak(1.5, 4.94, 17.88) == doctest::Approx(1.5 / (3.94 * 17.88)));
  }

  TEST_CASE("gated overlap column is the exact bin mean") {
    auto h = Histogram::with_range(-3e6, 3e6, 1000.0, Axis::delay);
    const GatingConfig g{0.8, 1.2, 0.0, 1.0};
    const auto col = gated_overlap_column(h, g, 0.0, 0.0, 0.8);
    for (std::size_t i = 0; i < h.size(); i += 97) {
      const double mid = h.bin_center(i) * 1e-6;
      CHECK(col[i] == doctest::Approx(background_profile(g, mid)).epsilon(1e-6));
    }
  }

  TEST_CASE("bin-averaged shapes") {
    CHECK(bin_average_shape(PeakFamily::gaussian, 100.0, -1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(bin_average_shape(PeakFamily::two_sided_exponential, 100.0, 0.0, 100.0) ==
          doctest::Approx(1.0 - std::exp(-1.0)));
    CHECK(bin_average_shape(PeakFamily::one_sided_exponential, 100.0, -200.0, -100.0) == 0.0);
  }
}
