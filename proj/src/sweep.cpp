#include "hqnet/sweep.h"

#include <cmath>
#include <json.hpp>
#include <sstream>

#include "hqnet/constants.h"
#include "hqnet/error.h"
#include "hqnet/expectation.h"
#include "hqnet/parallel.h"
#include "hqnet/rng.h"
#include "hqnet/simulate.h"

namespace hqnet {

namespace {

CrossG2Options base_options(const ScenarioConfig& cfg) {
  CrossG2Options o;
  if (cfg.gating.enabled) {
    o.gating = cfg.gating.window;
    o.fit_tau_d = false;
    if (cfg.memory.enabled) o.storage_time_us = echo_parameters(cfg.memory.afc).storage_time_us;
  }
  return o;
}

double path_offset_ps(const ScenarioConfig& cfg) {
  double offset_us = cfg.gating.enabled ? cfg.gating.window.tau_d_us : 0.0;
  if (cfg.link.enabled && !cfg.link.compensate_delay) offset_us += fiber_delay_us(cfg.link.fiber);
  return offset_us * 1e6;
}

void require_memory(const ScenarioConfig& cfg) {
  if (!cfg.memory.enabled) throw Error(ErrorCode::config_invalid, "echo metrics need [memory] enabled = true");
}

}  // namespace

double direct_peak_delay_ps(const ScenarioConfig& cfg) { return path_offset_ps(cfg); }

double echo_peak_delay_ps(const ScenarioConfig& cfg) {
  return path_offset_ps(cfg) + echo_parameters(cfg.memory.afc).storage_time_us * 1e6;
}

Histogram source_histogram(const TimeTagStream& stream, const ScenarioConfig& cfg, const MeasureSettings& s) {
  const double c = direct_peak_delay_ps(cfg);
  return coincidence_histogram(stream, kHeraldChannel, kSignalChannel, s.source_bin_ps, c - s.source_half_range_ps,
                               c + s.source_half_range_ps);
}

Histogram echo_histogram(const TimeTagStream& stream, const ScenarioConfig& cfg, const MeasureSettings& s) {
  require_memory(cfg);
  const double c = echo_peak_delay_ps(cfg);
  return coincidence_histogram(stream, kHeraldChannel, kSignalChannel, s.echo_bin_ps, c - s.echo_half_range_ps,
                               c + s.echo_half_range_ps);
}

CorrelationResult fit_source_peak(const Histogram& hist, const ScenarioConfig& cfg) {
  auto o = base_options(cfg);
  o.family = peak_family_for(cfg.source.model.shape);
  o.peak_delay_ps = direct_peak_delay_ps(cfg);
  o.search_half_width_ps = std::max(2e3, 3.0 * hist.bin_width);
  o.peak_width_ps = cfg.source.model.correlation_time_ns * 1e3;
  return cross_g2(hist, o);
}

CorrelationResult fit_echo_peak(const Histogram& hist, const ScenarioConfig& cfg) {
  require_memory(cfg);
  auto o = base_options(cfg);
  o.family = PeakFamily::gaussian;
  o.peak_delay_ps = echo_peak_delay_ps(cfg);
  const double sigma_ps = echo_parameters(cfg.memory.afc).echo_fwhm_ns * 1e3 / constants::fwhm_per_sigma;
  o.search_half_width_ps = std::max(3.0 * sigma_ps, 3.0 * hist.bin_width);
  o.peak_width_ps = sigma_ps;
  return cross_g2(hist, o);
}

MultimodeOptions multimode_options(const ScenarioConfig& cfg, const MeasureSettings& s) {
  require_memory(cfg);
  MultimodeOptions o;
  o.bin_ps = s.echo_bin_ps;
  o.half_range_ps = s.echo_half_range_ps;
  o.storage_time_us = echo_peak_delay_ps(cfg) * 1e-6;
  o.fit = base_options(cfg);
  o.fit.family = PeakFamily::gaussian;
  const double sigma_ps = echo_parameters(cfg.memory.afc).echo_fwhm_ns * 1e3 / constants::fwhm_per_sigma;
  o.fit.search_half_width_ps = std::max(3.0 * sigma_ps, 3.0 * s.echo_bin_ps);
  o.fit.peak_width_ps = sigma_ps;
  return o;
}

SweepMetric parse_metric(const std::string& name) {
  if (name == "echo_rate") return SweepMetric::echo_rate;
  if (name == "g2_he") return SweepMetric::g2_he;
  if (name == "g2_hs") return SweepMetric::g2_hs;
  if (name == "efficiency") return SweepMetric::efficiency;
  throw Error(ErrorCode::config_invalid, "unknown metric '" + name + "' (echo_rate, g2_he, g2_hs, efficiency)");
}

std::string to_string(SweepMetric metric) {
  switch (metric) {
    case SweepMetric::echo_rate:
      return "echo_rate";
    case SweepMetric::g2_he:
      return "g2_he";
    case SweepMetric::g2_hs:
      return "g2_hs";
    case SweepMetric::efficiency:
      return "efficiency";
  }
  return "unknown";
}

std::uint64_t sweep_seed(std::uint64_t base, std::size_t point, int repeat) {
  std::uint64_t state = base;
  std::uint64_t mixed = splitmix64(state);
  state = mixed ^ (static_cast<std::uint64_t>(point) << 32) ^ static_cast<std::uint64_t>(repeat);
  return splitmix64(state);
}

double measure_metric(const ScenarioConfig& cfg, SweepMetric metric, const MeasureSettings& s, double* stderr_out) {
  double value = 0.0;
  double err = 0.0;
  if (metric == SweepMetric::g2_hs) {
    const auto stream = generate(cfg);
    const auto r = fit_source_peak(source_histogram(stream, cfg, s), cfg);
    value = r.g2_max;
    err = r.g2_stderr;
  } else {
    require_memory(cfg);
    const auto stream = generate(cfg);
    const auto hist = echo_histogram(stream, cfg, s);
    const auto r = fit_echo_peak(hist, cfg);
    const double rate = r.net_counts / hist.acquisition_s;
    const double rate_err = r.net_counts_stderr / hist.acquisition_s;
    if (metric == SweepMetric::g2_he) {
      value = r.g2_max;
      err = r.g2_stderr;
    } else if (metric == SweepMetric::echo_rate) {
      value = rate;
      err = rate_err;
    } else {
      const auto src_cfg = source_characterisation(cfg);
      const auto src_stream = generate(src_cfg);
      const auto src_hist = source_histogram(src_stream, src_cfg, s);
      const auto src = fit_source_peak(src_hist, src_cfg);
      const double src_rate = src.net_counts / src_hist.acquisition_s;
      if (!(src_rate > 0.0)) throw Error(ErrorCode::insufficient_statistics, "no source coincidences");
      value = rate / src_rate;
      err = value * std::hypot(rate > 0.0 ? rate_err / rate : 0.0, src.net_counts_stderr / src.net_counts);
    }
  }
  if (stderr_out) *stderr_out = err;
  return value;
}

double expected_metric(const ScenarioConfig& cfg, SweepMetric metric) {
  const auto e = expected_correlation(cfg);
  switch (metric) {
    case SweepMetric::echo_rate:
      require_memory(cfg);
      return e.echo.coincidence_rate_cps * e.live_fraction;
    case SweepMetric::g2_he:
      require_memory(cfg);
      return e.echo.g2;
    case SweepMetric::g2_hs:
      return e.direct.g2;
    case SweepMetric::efficiency: {
      require_memory(cfg);
      const auto src = expected_correlation(source_characterisation(cfg));
      return e.echo.coincidence_rate_cps / src.direct.coincidence_rate_cps;
    }
  }
  return 0.0;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const ScenarioConfig& cfg, const SweepOptions& options) {
  if (spec.values.empty()) throw Error(ErrorCode::config_invalid, "sweep needs at least one value");
  if (spec.repeats < 1) throw Error(ErrorCode::config_invalid, "repeats must be >= 1");
  // Resolve the parameter path once so an unknown key fails before any work.
  with_value(cfg, spec.parameter, spec.values.front());

  const int repeats = spec.mode == SweepMode::expected ? 1 : spec.repeats;
  const std::size_t tasks = spec.values.size() * static_cast<std::size_t>(repeats);
  std::vector<double> values(tasks);
  std::vector<double> errors(tasks);
  parallel_for(tasks, resolve_jobs(options.jobs), [&](std::size_t task) {
    const std::size_t point = task / static_cast<std::size_t>(repeats);
    const int repeat = static_cast<int>(task % static_cast<std::size_t>(repeats));
    try {
      ScenarioConfig c = with_value(cfg, spec.parameter, spec.values[point]);
      if (spec.mode == SweepMode::expected) {
        values[task] = expected_metric(c, spec.metric);
      } else {
        c.run.seed = sweep_seed(cfg.run.seed, point, repeat);
        values[task] = measure_metric(c, spec.metric, options.measure, &errors[task]);
      }
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "sweep point " << point << " (" << spec.parameter << " = " << spec.values[point] << "): " << e.what();
      throw Error(e.code(), msg.str());
    }
  });

  std::vector<SweepRow> rows;
  for (std::size_t p = 0; p < spec.values.size(); ++p) {
    SweepRow row;
    row.value = spec.values[p];
    row.repeats = repeats;
    double sum = 0.0;
    for (int r = 0; r < repeats; ++r) sum += values[p * repeats + r];
    row.mean = sum / repeats;
    if (repeats > 1) {
      double ss = 0.0;
      for (int r = 0; r < repeats; ++r) ss += std::pow(values[p * repeats + r] - row.mean, 2);
      row.stderr_mean = std::sqrt(ss / (repeats - 1) / repeats);
    } else {
      row.stderr_mean = errors[p * repeats];
    }
    if (options.point_dir) {
      nlohmann::json j{{"parameter", spec.parameter}, {"value", row.value},      {"metric", to_string(spec.metric)},
                       {"mean", row.mean},            {"stderr", row.stderr_mean}, {"repeats", row.repeats},
                       {"scenario_hash", scenario_hash(with_value(cfg, spec.parameter, row.value))}};
      write_text_atomic(*options.point_dir / ("point_" + std::to_string(p) + ".json"), j.dump(2) + "\n");
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  const auto m = to_string(spec.metric);
  out << spec.parameter << ',' << m << "_mean," << m << "_stderr,repeats\n";
  for (const auto& r : rows) out << r.value << ',' << r.mean << ',' << r.stderr_mean << ',' << r.repeats << '\n';
  return out.str();
}

}  // namespace hqnet
