#include "hqnet/expectation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hqnet/constants.h"
#include "hqnet/error.h"
#include "hqnet/link.h"
#include "hqnet/source.h"

namespace hqnet {

namespace {

struct Window {
  double start_us;
  double instant_cps;
};

std::vector<Window> signal_windows(const ChannelRates& r) {
  return {{r.direct_window_start_us, r.direct_instant_cps},
          {r.echo_window_start_us, r.echo_instant_cps},
          {r.echo2_window_start_us, r.echo2_instant_cps}};
}

// Overlap of the herald gate with a signal window seen at delay tau.
double window_overlap(const ChannelRates& r, double start_us, double tau_us) {
  return cyclic_overlap(0.0, r.window_us, start_us - tau_us, start_us - tau_us + r.window_us, r.cycle_us);
}

double gaussian_pdf(double x, double sigma) {
  return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * constants::pi));
}

// Simpson rule over [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

double jittered_density(CorrelationShape shape, double tau_c, double sigma, double y) {
  const double reach = 12.0 * sigma;
  const double tail = 40.0 * tau_c;
  auto exp_part = [&](double x) {
    const double base = std::exp(-std::abs(x) / tau_c) / tau_c;
    return shape == CorrelationShape::symmetric ? 0.5 * base : base;
  };
  auto integrand = [&](double x) { return exp_part(x) * gaussian_pdf(y - x, sigma); };
  double total = simpson(integrand, std::max(0.0, y - reach), std::min(tail, y + reach), 2000);
  if (shape == CorrelationShape::symmetric)
    total += simpson(integrand, std::max(-tail, y - reach), std::min(0.0, y + reach), 2000);
  return total;
}

}  // namespace

ChannelRates channel_rates(const ScenarioConfig& cfg, const DerivedScenario& d, double arm_share) {
  if (!(arm_share > 0.0 && arm_share <= 1.0)) throw Error(ErrorCode::domain_error, "arm share must lie in (0, 1]");
  const auto& det = cfg.detectors;
  ChannelRates r;
  r.cycle_us = d.cycle_us;
  r.window_us = d.t_on_us;
  r.gate_fraction = d.gate_fraction();
  r.herald_instant_cps = det.herald_efficiency * d.herald_singles_cps + det.herald_dark_cps;
  const double reaching = d.signal_singles_cps * d.link_transmission * d.aom_transmission * det.signal_efficiency *
                          arm_share;
  r.direct_instant_cps = reaching * d.storage.transmit;
  r.echo_instant_cps = reaching * d.storage.echo;
  r.echo2_instant_cps = reaching * d.second_order_echo;
  const double detectors = det.hbt_split && arm_share >= 1.0 ? 2.0 : 1.0;
  r.floor_cps = det.signal_dark_cps * detectors + (cfg.memory.enabled ? cfg.memory.noise_rate_cps * arm_share : 0.0);
  r.direct_window_start_us = d.tau_d_us;
  r.echo_window_start_us = d.tau_d_us + d.tau_afc_us;
  r.echo2_window_start_us = d.tau_d_us + 2.0 * d.tau_afc_us;
  return r;
}

double accidental_density_per_ns(const ChannelRates& r, double tau_us) {
  double windowed = 0.0;
  for (const auto& w : signal_windows(r)) {
    if (w.instant_cps > 0.0) windowed += w.instant_cps * window_overlap(r, w.start_us, tau_us);
  }
  const double per_s = r.herald_instant_cps * (windowed / r.cycle_us + r.gate_fraction * r.floor_cps);
  return per_s * 1e-9;
}

double accidental_rate_in(const ChannelRates& r, double lo_us, double hi_us) {
  if (!(hi_us > lo_us)) return 0.0;
  // Kinks of each overlap lie at start - window, start and start + window, modulo the cycle.
  std::vector<double> knots{lo_us, hi_us};
  for (const auto& w : signal_windows(r)) {
    for (double k : {w.start_us - r.window_us, w.start_us, w.start_us + r.window_us}) {
      const double first = k + r.cycle_us * std::ceil((lo_us - k) / r.cycle_us);
      for (double x = first; x < hi_us; x += r.cycle_us)
        if (x > lo_us) knots.push_back(x);
    }
  }
  std::sort(knots.begin(), knots.end());
  double sum = 0.0;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const double a = knots[i - 1];
    const double b = knots[i];
    sum += 0.5 * (accidental_density_per_ns(r, a) + accidental_density_per_ns(r, b)) * (b - a) * 1e3;
  }
  return sum;
}

double jittered_peak_per_ns(CorrelationShape shape, double tau_c_ns, double sigma_ns) {
  if (!(tau_c_ns > 0.0)) throw Error(ErrorCode::domain_error, "correlation time must be > 0");
  if (sigma_ns <= 0.0) return delay_density_peak_per_ns(shape, tau_c_ns);
  if (shape == CorrelationShape::symmetric) return jittered_density(shape, tau_c_ns, sigma_ns, 0.0);
  // The one-sided convolution is unimodal; golden-section search for its maximum.
  double a = -2.0 * sigma_ns;
  double b = 4.0 * sigma_ns + 4.0 * tau_c_ns;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 80; ++i) {
    const double c = b - g * (b - a);
    const double e = a + g * (b - a);
    if (jittered_density(shape, tau_c_ns, sigma_ns, c) > jittered_density(shape, tau_c_ns, sigma_ns, e))
      b = e;
    else
      a = c;
  }
  return jittered_density(shape, tau_c_ns, sigma_ns, 0.5 * (a + b));
}

ExpectedCorrelation expected_correlation(const ScenarioConfig& cfg, double arm_share) {
  const DerivedScenario d = derive(cfg);
  ExpectedCorrelation out;
  out.rates = channel_rates(cfg, d, arm_share);
  out.live_fraction = cfg.run.duration_s > 0.0 ? cfg.run.storage_duty : 1.0;

  const auto& det = cfg.detectors;
  const double offset_us = cfg.link.compensate_delay ? 0.0 : d.fiber_delay_us;
  double passing = 1.0;
  if (d.gated) passing = cyclic_overlap(0.0, d.t_on_us, offset_us, offset_us + d.t_on_us, d.cycle_us) / d.t_on_us;
  const double heralded = d.pair_rate_cps * det.herald_efficiency * d.gate_fraction() * passing *
                          d.link_transmission * d.aom_transmission * det.signal_efficiency * arm_share;

  const double sigma_ns = d.echo_fwhm_ns / constants::fwhm_per_sigma;
  auto fill = [&](ExpectedPeak& p, double delay_us, double probability, double peak) {
    p.delay_us = delay_us;
    p.coincidence_rate_cps = heralded * probability;
    p.peak_density_per_ns = peak;
    p.background_per_ns = accidental_density_per_ns(out.rates, delay_us);
    p.g2 = p.background_per_ns > 0.0 ? 1.0 + p.coincidence_rate_cps * peak / p.background_per_ns
                                     : std::numeric_limits<double>::infinity();
  };
  fill(out.direct, offset_us + d.tau_d_us, d.storage.transmit,
       delay_density_peak_per_ns(d.shape, d.correlation_time_ns));
  fill(out.echo, offset_us + d.tau_d_us + d.tau_afc_us, d.storage.echo,
       jittered_peak_per_ns(d.shape, d.correlation_time_ns, sigma_ns));
  return out;
}

CalibratedPoint calibrate_operating_point(const ScenarioConfig& cfg, double echo_rate_cps, double echo_g2) {
  if (cfg.source.singles_model != SinglesModel::g2_target || !cfg.source.operating_table.empty())
    throw Error(ErrorCode::config_invalid, "calibration needs the g2_target singles model and no operating table");
  if (!(echo_rate_cps > 0.0) || !(echo_g2 > 1.0))
    throw Error(ErrorCode::domain_error, "calibration targets must be positive with g2 > 1");
  const auto& model = cfg.source.model;

  auto configured = [&](double pair_ref, double g2_max) {
    ScenarioConfig c = cfg;
    c.source.model.pair_rate_cps = pair_ref;
    c.source.model.herald_singles_cps = model.herald_singles_cps * pair_ref / model.pair_rate_cps;
    c.source.model.g2_cross_max = g2_max;
    return c;
  };
  // Echo g2 at fixed pair rate; unreachable singles count as too high.
  auto echo_g2_at = [&](double pair_ref, double g2_max) {
    try {
      return expected_correlation(configured(pair_ref, g2_max)).echo.g2;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  CalibratedPoint point{model.pair_rate_cps, model.g2_cross_max};
  for (int outer = 0; outer < 40; ++outer) {
    const auto e = expected_correlation(configured(point.pair_rate_cps, point.g2_max));
    const double rate = e.echo.coincidence_rate_cps * e.live_fraction;
    if (!(rate > 0.0)) throw Error(ErrorCode::model_inconsistent, "scenario produces no echo");
    const double next_rate = point.pair_rate_cps * echo_rate_cps / rate;

    double lo = 1.0 + 1e-9;
    double hi = 1e6;
    if (echo_g2_at(next_rate, hi) < echo_g2)
      throw Error(ErrorCode::model_inconsistent, "target echo g2 exceeds what the scenario can reach");
    for (int i = 0; i < 200; ++i) {
      const double mid = std::sqrt(lo * hi);
      (echo_g2_at(next_rate, mid) < echo_g2 ? lo : hi) = mid;
    }
    const double next_g2 = std::sqrt(lo * hi);
    const bool settled = std::abs(next_rate - point.pair_rate_cps) < 1e-12 * next_rate &&
                         std::abs(next_g2 - point.g2_max) < 1e-12 * next_g2;
    point = {next_rate, next_g2};
    if (settled) break;
  }
  return point;
}

}  // namespace hqnet
