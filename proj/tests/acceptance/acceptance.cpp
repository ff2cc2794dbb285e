// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "hqnet/analysis.h"
#include "hqnet/constants.h"
#include "hqnet/expectation.h"
#include "hqnet/fitting.h"
#include "hqnet/link.h"
#include "hqnet/memory.h"
#include "hqnet/rng.h"
#include "hqnet/scenario.h"
#include "hqnet/simulate.h"
#include "hqnet/source.h"
#include "hqnet/superhyperfine.h"
#include "hqnet/sweep.h"
#include "hqnet/timetag.h"

using namespace hqnet;

namespace {

const std::filesystem::path kScenarios = HQNET_SOURCE_DIR "/scenarios";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1));
}

TimeTagStream sorted(std::vector<TimeTag> events) {
  std::sort(events.begin(), events.end(), [](const TimeTag& a, const TimeTag& b) {
    return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps : a.channel < b.channel;
  });
  TimeTagStream s;
  s.events = std::move(events);
  s.metadata.duration_s = 1.0;
  return s;
}

Outcome afc_evaluator() {
  const double eta = afc_efficiency(4.5, 3.0, 0.0);
  const auto opt = optimal_finesse(4.5, 0.0);
  const double h = 1e-4;
  const double slope = (afc_efficiency(4.5, opt.finesse + h, 0.0) - afc_efficiency(4.5, opt.finesse - h, 0.0)) / (2 * h);
  const bool pass = std::abs(eta - 0.2276) <= 1e-4 && std::abs(opt.finesse - 4.02) <= 0.01 &&
                    std::abs(opt.efficiency - 0.263) <= 0.001 && std::abs(slope) < 1e-8 * opt.efficiency;
  return {pass, fmt("eta(4.5,3,0)=%.5f F*=%.4f eta*=%.5f |deta/dF|=%.1e", eta, opt.finesse, opt.efficiency,
                    std::abs(slope))};
}

Outcome zeeman() {
  const ErTransitionConfig er;
  const double shift = zeeman_shift(er, 1.0);
  const double pol = electron_polarization(er, 1.0);
  const bool pass = std::abs(shift + 6.788) <= 0.005 * 6.788 && -shift >= 6.4 && -shift <= 6.8 &&
                    std::abs(pol - 0.9999997) <= 1e-7;
  return {pass, fmt("shift(1 T)=%.4f GHz polarization=%.8f", shift, pol)};
}

Outcome superhyperfine() {
  const auto sites = vanadium_neighbours();
  const Vec3 b{0.0, 0.0, 1.0};
  const double g = 3.54;
  const double central = central_spacing_mhz(spin_levels(sites[0], dipolar_field(sites[0], g, b)));
  const double optical = transition_spacing_khz(sites[0], g, 4.51, 1.0);
  const auto band = band_spectrum(sites, g, 1.0, 1.0);

  std::vector<std::vector<double>> sets;
  for (const auto& s : sites) sets.push_back(spin_levels(s, dipolar_field(s, g, b)).energies_mhz);
  std::vector<std::uint64_t> brute(band.size(), 0);
  bool outside = false;
  std::vector<std::size_t> idx(sites.size(), 0);
  for (;;) {
    double e = 0.0;
    for (std::size_t s = 0; s < sites.size(); ++s) e += sets[s][idx[s]];
    const auto i = band.index_of(e);
    if (i < 0)
      outside = true;
    else
      ++brute[static_cast<std::size_t>(i)];
    std::size_t s = 0;
    while (s < idx.size() && ++idx[s] == sets[s].size()) idx[s++] = 0;
    if (s == idx.size()) break;
  }
  std::size_t first = band.size();
  std::size_t last = 0;
  for (std::size_t i = 0; i < band.size(); ++i)
    if (band.counts[i]) first = std::min(first, i), last = i;
  const double span = static_cast<double>(last - first + 1) * band.bin_width;
  const bool exact = !outside && brute == band.counts && band.total() == 262144u;
  const bool pass = std::abs(central - 10.9) <= 0.2 && std::abs(optical - 351.0) <= 0.15 * 351.0 &&
                    std::abs(span - 500.0) <= 50.0 && exact;
  return {pass, fmt("central=%.3f MHz optical=%.1f kHz span=%.0f MHz brute-force %s", central, optical, span,
                    exact ? "identical" : "differs")};
}

Outcome gating_background() {
  auto cfg = load_scenario(kScenarios / "fig1c_source.toml");
  cfg.gating.enabled = true;
  cfg.gating.window = GatingConfig{0.8, 1.2, 0.0, 1.0};
  cfg.source.singles_model = SinglesModel::rates;
  cfg.source.model.herald_singles_cps = 100e3;
  cfg.source.model.signal_singles_cps = 200e3;
  auto d = derive(cfg);
  // Pairs are emitted only while the gate is open.
  cfg.run.duration_s = 1e6 / (d.pair_rate_cps * d.gate_fraction() * cfg.run.storage_duty);
  cfg.run.seed = 41;
  d = derive(cfg);
  const auto stream = generate(cfg);
  const auto rates = channel_rates(cfg, d);

  const double bin_ps = 20e3;
  const auto hist = coincidence_histogram(stream, kHeraldChannel, kSignalChannel, bin_ps, -2e6, 4e6);
  double chi2 = 0.0;
  int dof = 0;
  std::uint64_t segment = 0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double lo = hist.bin_low(i);
    const double hi = lo + bin_ps;
    if (lo >= 0.8e6 && hi <= 1.2e6) segment += hist.counts[i];
    if (hi > -10e3 && lo < 10e3) continue;  // correlated pairs
    const double expected = accidental_rate_in(rates, lo * 1e-6, hi * 1e-6) * d.live_time_s;
    if (expected <= 0.0) continue;
    const double diff = static_cast<double>(hist.counts[i]) - expected;
    chi2 += diff * diff / expected;
    ++dof;
  }
  const double reduced = chi2 / dof;
  const bool segment_zero = static_cast<double>(segment) <= 3.0 * std::sqrt(static_cast<double>(segment));
  const double tau_afc = echo_parameters(cfg.memory.afc).storage_time_us;
  const bool echo_inside = validate_gating(cfg.gating.window, 1.01).ok && 1.01 > 0.8 && 1.01 < 1.2;
  const bool pass = reduced >= 0.7 && reduced <= 1.3 && segment_zero && echo_inside;
  return {pass, fmt("%.0f pairs, reduced chi2=%.3f over %d bins, %llu counts in [0.8, 1.2] us, echo at %.3f us %s",
                    d.pair_rate_cps * d.gate_fraction() * d.live_time_s, reduced, dof,
                    static_cast<unsigned long long>(segment), tau_afc, echo_inside ? "inside" : "outside")};
}

Outcome correlation_pipeline() {
  auto cfg = load_scenario(kScenarios / "fig1c_source.toml");
  cfg.run.duration_s = 1.0;
  std::vector<double> g2;
  std::vector<double> err;
  int within = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.run.seed = seed;
    const auto r = fit_source_peak(source_histogram(generate(cfg), cfg), cfg);
    g2.push_back(r.g2_max);
    err.push_back(r.g2_stderr);
    if (std::abs(r.g2_max - 130.0) <= 2.0 * r.g2_stderr) ++within;
  }
  const double m = mean(g2);
  const double sem = stddev(g2) / std::sqrt(20.0);
  const bool g2_ok = std::abs(m - 130.0) <= 2.0 * sem && within >= 17;

  const bool cs_ok = cauchy_schwarz(130.0, 2.0, 2.0) == 4225.0;

  Rng rng(8);
  std::vector<TimeTag> perfect;
  std::vector<TimeTag> coherent;
  for (int i = 0; i < 200000; ++i) {
    const std::uint64_t t = 1000 + static_cast<std::uint64_t>(i) * 50'000;
    perfect.push_back({t, 0});
    perfect.push_back({t + 20, static_cast<std::uint8_t>(rng.uniform() < 0.5 ? 1 : 2)});
    coherent.push_back({t, 0});
    for (std::uint8_t arm : {std::uint8_t{1}, std::uint8_t{2}})
      for (auto n = rng.poisson(0.3); n > 0; --n)
        coherent.push_back({t - 100 + static_cast<std::uint64_t>(200.0 * rng.uniform()), arm});
  }
  const double zero = heralded_auto_g2(sorted(perfect), 0, 1, 2).g2;
  const double one = heralded_auto_g2(sorted(coherent), 0, 1, 2).g2;

  auto hbt = load_scenario(kScenarios / "fig3a_hbt.toml");
  AutoG2Options o;
  o.window_start_ns = direct_peak_delay_ps(hbt) * 1e-3 - 0.5 * o.window_ns;
  const auto low_n = heralded_auto_g2(generate(hbt), kHeraldChannel, kSignalChannel, kSignalBChannel, o);

  const bool pass = g2_ok && cs_ok && zero == 0.0 && std::abs(one - 1.0) <= 0.05 && low_n.g2 < 0.5;
  return {pass, fmt("g2_hs mean %.2f +- %.2f over 20 seeds (%d within 2 stderr), CS=%.0f, auto g2 perfect=%.3f "
                    "poisson=%.4f scenario=%.3f +- %.3f",
                    m, sem, within, cauchy_schwarz(130.0, 2.0, 2.0), zero, one, low_n.g2, low_n.g2_stderr)};
}

Outcome mean_pair() {
  const double n = mean_pair_number(423e3, 2333e3, 46e3, 0.32);
  return {std::abs(n - 0.0069) <= 1e-4, fmt("<n>=%.6f", n)};
}

Outcome multimode() {
  auto cfg = load_scenario(kScenarios / "fig4b_multimode.toml");
  // Tenfold echo statistics keep each mode's background well populated.
  cfg.memory.efficiency = 0.5;
  const auto stream = generate(cfg);
  const auto stats = multimode_stats(stream, multimode_windows(cfg, 37, 20.0), multimode_options(cfg));
  const auto& trend = stats.g2_trend;
  const double pull = trend.slope_stderr > 0.0 ? trend.slope / trend.slope_stderr : 0.0;
  const bool pass = stats.cumulative_fit.r_squared > 0.99 && std::abs(pull) <= 2.0;
  return {pass, fmt("37 modes: cumulative R2=%.5f, g2 slope %.4f +- %.4f per mode (%.2f sigma)",
                    stats.cumulative_fit.r_squared, trend.slope, trend.slope_stderr, pull)};
}

struct Measured {
  double rate = 0.0;
  double rate_err = 0.0;
  double g2 = 0.0;
  double g2_err = 0.0;
};

Measured measure_echo(const ScenarioConfig& cfg) {
  const auto hist = echo_histogram(generate(cfg), cfg);
  const auto r = fit_echo_peak(hist, cfg);
  return {r.net_counts / hist.acquisition_s, r.net_counts_stderr / hist.acquisition_s, r.g2_max, r.g2_stderr};
}

Outcome fiber_scaling() {
  auto cfg = load_scenario(kScenarios / "fig4de_fiber.toml");
  // Tenfold echo statistics so the 49.2 km point still resolves the peak.
  cfg.memory.efficiency = 0.5;
  cfg.run.duration_s = 200.0;
  const std::vector<double> lengths{0.0, 10.0, 25.0, 49.2};
  std::vector<double> log_rate;
  std::vector<double> log_err;
  std::vector<double> g2;
  std::vector<double> g2_err;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    auto c = with_value(cfg, "link.length_km", lengths[i]);
    c.run.seed = sweep_seed(cfg.run.seed, i, 0);
    const auto m = measure_echo(c);
    log_rate.push_back(std::log10(m.rate));
    log_err.push_back(m.rate_err / (m.rate * std::log(10.0)));
    g2.push_back(m.g2);
    g2_err.push_back(m.g2_err);
  }
  const auto slope = fit_line(lengths, log_rate, log_err);
  const auto g2_trend = fit_line(lengths, g2, g2_err);
  const double g2_pull = g2_trend.slope / g2_trend.slope_stderr;

  const auto loop = load_scenario(kScenarios / "deployed_loop.toml");
  auto base = with_value(with_value(loop, "link.length_km", 0.0), "link.excess_loss_dB", 0.0);
  base.run.duration_s = 100.0;
  base.run.seed = loop.run.seed + 100;
  const auto far = measure_echo(loop);
  const auto near = measure_echo(base);
  const double ratio = far.rate / near.rate;
  const double ratio_err = ratio * std::hypot(far.rate_err / far.rate, near.rate_err / near.rate);
  const double expected_ratio = fiber_transmission(loop.link.fiber);

  const bool pass = std::abs(slope.slope + 0.032) <= 0.1 * 0.032 && std::abs(g2_pull) <= 2.0 &&
                    std::abs(ratio - 0.175) <= 3.0 * ratio_err;
  return {pass, fmt("slope %.5f +- %.5f /km, g2_he trend %.2f sigma, deployed ratio %.4f +- %.4f (transmission %.4f)",
                    slope.slope, slope.slope_stderr, g2_pull, ratio, ratio_err, expected_ratio)};
}

Outcome loss() {
  const auto b = loss_budget(reference_loss_components());
  const bool pass = std::abs(b.total / 5.4e-5 - 1.0) <= 0.02 && std::abs(b.internal - 0.005) <= 1e-12;
  return {pass, fmt("product=%.4e internal=%.4f", b.total, b.internal)};
}

// Expected accidental counts per wall second in one echo bin.
double echo_background_per_bin(const ScenarioConfig& cfg, double bin_ps) {
  const auto e = expected_correlation(cfg);
  return e.echo.background_per_ns * bin_ps * 1e-3 * e.live_fraction;
}

Outcome noise() {
  auto cfg = load_scenario(kScenarios / "fig3b_echo.toml");
  cfg.memory.noise_rate_cps = 200.0;
  cfg.run.duration_s = 40.0;
  const MeasureSettings s;
  auto quiet = cfg;
  quiet.memory.noise_rate_cps = 0.0;
  auto dark_free = quiet;
  dark_free.detectors.signal_dark_cps = 0.0;
  const double injected = echo_background_per_bin(cfg, s.echo_bin_ps) - echo_background_per_bin(quiet, s.echo_bin_ps);
  const double d_snspd =
      echo_background_per_bin(quiet, s.echo_bin_ps) - echo_background_per_bin(dark_free, s.echo_bin_ps);

  std::vector<double> recovered;
  for (std::size_t seed = 0; seed < 50; ++seed) {
    auto net = cfg;
    net.run.seed = sweep_seed(cfg.run.seed, seed, 0);
    auto src = source_characterisation(net);
    src.run.duration_s = 0.5;
    src.run.seed = sweep_seed(cfg.run.seed, seed, 1);
    const auto echo_hist = echo_histogram(generate(net), net, s);
    const auto src_hist = source_histogram(generate(src), src, s);
    const auto b = noise_budget(src_hist, fit_source_peak(src_hist, src), echo_hist, fit_echo_peak(echo_hist, net),
                                std::nullopt, d_snspd);
    recovered.push_back(b.d_afc);
  }
  const double m = mean(recovered);
  const double sem = stddev(recovered) / std::sqrt(50.0);
  const double pull = (m - injected) / sem;
  const bool injection_ok = std::abs(pull) <= 3.0;

  // Published operating values: source rates from the characterisation, echo
  // from the 903 MHz point, both in their native bins.
  const double sigma_ns = 8.4 / constants::fwhm_per_sigma;
  const double echo_area_bins = sigma_ns * std::sqrt(2.0 * constants::pi) / 0.5;
  NoiseInputs in;
  in.echo_rate_cps = 1.5;
  in.echo_bin_ps = 500.0;
  in.echo_background_cps = background_from_peak(1.5, 4.94, echo_area_bins);
  in.source_rate_cps = 46e3;
  in.source_bin_ps = 50.0;
  in.source_background_cps = 423e3 * 2333e3 * 50e-12;
  const auto paper = solve_noise_budget(in);
  const double d = paper.d_afc_plus_snspd;
  const bool reconstruction_ok = d >= 0.33e-3 && d <= 0.47e-3;

  // Same echo, source background taken from g2_hs = 130 with the peak area set by tau_c.
  auto from_envelope = [&](double width_ns) {
    NoiseInputs alt = in;
    alt.source_background_cps = 46e3 / ((130.0 - 1.0) * width_ns / 0.05);
    return solve_noise_budget(alt).d_afc_plus_snspd;
  };
  double lo = 0.2;
  double hi = 0.4;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (from_envelope(mid) > 0.40e-3 ? hi : lo) = mid;
  }

  return {injection_ok && reconstruction_ok,
          fmt("injection: recovered %.3e vs injected %.3e cps/bin (%.2f sigma over 50 seeds); published inputs give "
              "D_AFC+D_SNSPD=%.2e cps (target [0.33, 0.47]e-3); with a 0.32 ns source envelope %.2e; 0.40e-3 needs "
              "a %.3f ns envelope",
              m, injected, pull, d, from_envelope(0.32), 0.5 * (lo + hi))};
}

Outcome format_properties() {
  auto cfg = load_scenario(kScenarios / "fig3b_echo.toml");
  cfg.run.duration_s = 5.0;
  const auto one = generate(cfg, {1});
  const auto four = generate(cfg, {4});
  const bool jobs_ok = one.events == four.events;

  const auto bytes = encode_hqtt(one);
  const auto decoded = decode_hqtt(bytes);
  const bool round_trip = encode_hqtt(decoded) == bytes && decoded.events == one.events;

  bool brute_ok = true;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng rng(seed);
    std::vector<TimeTag> ev;
    for (int i = 0; i < 10000; ++i) ev.push_back({rng.next() % 20'000'000, static_cast<std::uint8_t>(rng.next() % 3)});
    const auto s = sorted(ev);
    const auto h = coincidence_histogram(s, 0, 1, 37.0, -7000.0, 9000.0);
    std::vector<std::uint64_t> brute(h.size(), 0);
    for (const auto& a : s.events) {
      if (a.channel != 0) continue;
      for (const auto& b : s.events) {
        if (b.channel != 1) continue;
        const auto i = h.index_of(static_cast<double>(b.timestamp_ps) - static_cast<double>(a.timestamp_ps));
        if (i >= 0) ++brute[static_cast<std::size_t>(i)];
      }
    }
    brute_ok = brute_ok && h.counts == brute;
  }
  return {jobs_ok && round_trip && brute_ok,
          fmt("%zu events: jobs 1 vs 4 %s, HQTT round trip %s, streaming vs brute force %s", one.events.size(),
              jobs_ok ? "identical" : "differ", round_trip ? "exact" : "differs", brute_ok ? "equal" : "differ")};
}

}  // namespace

// Optional arguments select criteria by number.
int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, afc_evaluator},       {2, zeeman}, {3, superhyperfine}, {4, gating_background}, {5, correlation_pipeline},
      {6, mean_pair},           {7, multimode}, {8, fiber_scaling}, {9, loss},           {10, noise},
      {11, format_properties}};
  int failures = 0;
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  int ran = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
