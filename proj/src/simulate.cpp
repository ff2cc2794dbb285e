#include "hqnet/simulate.h"

#include <algorithm>
#include <cmath>

#include "hqnet/constants.h"
#include "hqnet/error.h"
#include "hqnet/parallel.h"
#include "hqnet/rng.h"
#include "hqnet/source.h"
#include "hqnet/spectral.h"

namespace hqnet {

namespace {

constexpr double kUngatedChunkUs = 2.0;
constexpr std::uint64_t kCyclesPerBlock = 4096;

// Poisson count by inversion with a precomputed exp(-mean).
struct PoissonSampler {
  double mean = 0.0;
  double p0 = 1.0;

  explicit PoissonSampler(double m) : mean(m), p0(std::exp(-m)) {}

  std::uint64_t operator()(Rng& rng) const {
    if (mean <= 0.0) return 0;
    if (mean > 30.0) return rng.poisson(mean);
    double u = rng.uniform();
    double p = p0;
    std::uint64_t k = 0;
    while (u > p) {
      u -= p;
      ++k;
      p *= mean / static_cast<double>(k);
      if (p <= 0.0) break;
    }
    return k;
  }
};

struct CyclePlan {
  double cycle_ps = 0.0;
  double t_on_ps = 0.0;
  bool gated = false;
  double tau_d_ps = 0.0;
  double tau_afc_ps = 0.0;
  double echo_sigma_ps = 0.0;
  double fiber_offset_ps = 0.0;  // zero when the fiber delay is compensated
  double tau_c_ps = 0.0;
  bool symmetric = true;

  PoissonSampler pairs{0.0};
  PoissonSampler herald_only{0.0};
  PoissonSampler signal_only{0.0};
  PoissonSampler herald_dark{0.0};
  PoissonSampler signal_dark{0.0};  // per detector
  PoissonSampler memory_noise{0.0};

  double herald_eff = 1.0;
  double signal_eff = 1.0;
  double link = 1.0;
  double aom = 1.0;
  double p_echo = 0.0;
  double p_echo2 = 0.0;
  double p_transmit = 1.0;
  bool split = false;
  bool raw_herald = false;
  std::int64_t end_ps = 0;
};

class CycleWriter {
 public:
  CycleWriter(const CyclePlan& plan, std::vector<TimeTag>& out, std::uint64_t cycle)
      : plan_(plan), out_(out), origin_(static_cast<std::int64_t>(cycle) * static_cast<std::int64_t>(plan.cycle_ps)) {}

  void push(double t_ps, std::uint8_t channel) {
    const std::int64_t ts = origin_ + std::llround(t_ps);
    if (ts < 0 || ts >= plan_.end_ps) return;
    out_.push_back({static_cast<std::uint64_t>(ts), channel});
  }

  void herald(Rng& rng, double t, bool detector_click) {
    if (!detector_click && !rng.bernoulli(plan_.herald_eff)) return;
    if (plan_.raw_herald) push(t, kRawHeraldChannel);
    if (!plan_.gated || t < plan_.t_on_ps) push(t, kHeraldChannel);
  }

  std::uint8_t signal_detector(Rng& rng) const {
    return plan_.split && rng.uniform() >= 0.5 ? kSignalBChannel : kSignalChannel;
  }

  void signal(Rng& rng, double t) {
    if (!rng.bernoulli(plan_.link)) return;
    double at = t + plan_.fiber_offset_ps;
    if (plan_.gated) {
      const double phase = at - plan_.cycle_ps * std::floor(at / plan_.cycle_ps);
      if (phase >= plan_.t_on_ps) return;  // blocked by the optical gate
      if (!rng.bernoulli(plan_.aom)) return;
    }
    const double u = rng.uniform();
    if (u < plan_.p_echo) {
      at += plan_.tau_afc_ps + plan_.echo_sigma_ps * rng.normal();
    } else if (u < plan_.p_echo + plan_.p_echo2) {
      at += 2.0 * plan_.tau_afc_ps + plan_.echo_sigma_ps * rng.normal();
    } else if (u >= plan_.p_echo + plan_.p_echo2 + plan_.p_transmit) {
      return;
    }
    if (!rng.bernoulli(plan_.signal_eff)) return;
    push(at + plan_.tau_d_ps, signal_detector(rng));
  }

  double jitter(Rng& rng) const {
    const double dt = rng.exponential(plan_.tau_c_ps);
    if (!plan_.symmetric) return dt;
    return rng.uniform() < 0.5 ? -dt : dt;
  }

 private:
  const CyclePlan& plan_;
  std::vector<TimeTag>& out_;
  std::int64_t origin_;
};

void run_cycle(const CyclePlan& plan, std::uint64_t seed, std::uint64_t cycle, std::vector<TimeTag>& out) {
  Rng rng = Rng::substream(seed, cycle);
  CycleWriter w(plan, out, cycle);
  const double span = plan.cycle_ps;

  for (auto n = plan.pairs(rng); n > 0; --n) {
    const double t = span * rng.uniform();
    w.herald(rng, t, false);
    w.signal(rng, t + w.jitter(rng));
  }
  for (auto n = plan.herald_only(rng); n > 0; --n) w.herald(rng, span * rng.uniform(), false);
  for (auto n = plan.signal_only(rng); n > 0; --n) w.signal(rng, span * rng.uniform());
  for (auto n = plan.herald_dark(rng); n > 0; --n) w.herald(rng, span * rng.uniform(), true);
  for (auto n = plan.signal_dark(rng); n > 0; --n) w.push(span * rng.uniform(), kSignalChannel);
  if (plan.split)
    for (auto n = plan.signal_dark(rng); n > 0; --n) w.push(span * rng.uniform(), kSignalBChannel);
  for (auto n = plan.memory_noise(rng); n > 0; --n) {
    const double t = span * rng.uniform();
    w.push(t, w.signal_detector(rng));
  }
}

double required_signal_singles(const ScenarioConfig& cfg, double pair_rate, double herald_rate, double g2) {
  const auto& det = cfg.detectors;
  if (!(g2 > 1.0)) throw Error(ErrorCode::config_invalid, "singles_model g2_target needs g2_cross_max > 1");
  const double p0 = 1e9 * delay_density_peak_per_ns(cfg.source.model.shape, cfg.source.model.correlation_time_ns);
  const double herald_detected = det.herald_efficiency * herald_rate + det.herald_dark_cps;
  const double coincidences = det.herald_efficiency * det.signal_efficiency * pair_rate;
  const double signal_detected = coincidences * p0 / ((g2 - 1.0) * herald_detected);
  const double rate = (signal_detected - det.signal_dark_cps) / det.signal_efficiency;
  if (!(rate >= pair_rate))
    throw Error(ErrorCode::config_invalid, "g2_cross_max is unreachable: signal singles would fall below the pair rate");
  return rate;
}

}  // namespace

DerivedScenario derive(const ScenarioConfig& cfg) {
  DerivedScenario d;
  const auto& src = cfg.source;
  double pair_at_reference = src.model.pair_rate_cps;
  d.g2_cross_max = src.model.g2_cross_max;
  if (!src.operating_table.empty()) {
    auto path = std::filesystem::path(src.operating_table);
    if (path.is_relative()) path = cfg.base_dir / path;
    const auto point = interpolate(load_operating_table(path), src.operating_delta2_mhz);
    pair_at_reference = point.pair_rate_cps;
    d.g2_cross_max = point.g2_max;
  }
  const double pump_scale = (src.pump1_mw / src.model.power1_mw) * (src.pump2_mw / src.model.power2_mw);
  d.pair_rate_cps = pair_at_reference * pump_scale;
  const double singles_scale = src.model.pair_rate_cps > 0.0 ? d.pair_rate_cps / src.model.pair_rate_cps : pump_scale;
  d.herald_singles_cps = std::max(src.model.herald_singles_cps * singles_scale, d.pair_rate_cps);
  d.signal_singles_cps = src.singles_model == SinglesModel::g2_target
                             ? required_signal_singles(cfg, d.pair_rate_cps, d.herald_singles_cps, d.g2_cross_max)
                             : std::max(src.model.signal_singles_cps * singles_scale, d.pair_rate_cps);
  d.shape = src.model.shape;
  d.correlation_time_ns = src.model.correlation_time_ns;

  const auto echo = echo_parameters(cfg.memory.afc);
  d.tau_afc_us = echo.storage_time_us;
  d.echo_fwhm_ns = echo.echo_fwhm_ns;
  if (cfg.memory.enabled) {
    SpectralProfile shifted = src.spectrum;
    const double shift = feature_center(src.model, src.operating_delta2_mhz);
    for (auto& f : shifted.features) f.center_mhz += shift;
    d.in_band_fraction =
        absorbed_fraction(shifted, cfg.memory.afc.comb_center_mhz, cfg.memory.afc.comb_bandwidth_mhz);
    d.eta_afc = cfg.memory.efficiency >= 0.0
                    ? cfg.memory.efficiency
                    : afc_efficiency(cfg.memory.afc.tooth_optical_depth, cfg.memory.afc.finesse,
                                     cfg.memory.afc.background_depth);
    d.storage = storage_outcome(d.in_band_fraction, cfg.memory.polarization_factor, d.eta_afc,
                                comb_leakage(cfg.memory.afc));
    if (cfg.memory.second_order_echo) {
      d.second_order_echo = d.storage.echo * d.eta_afc;
      if (d.storage.echo + d.storage.transmit + d.second_order_echo > 1.0 + 1e-12)
        throw Error(ErrorCode::probability_overflow, "second-order echo pushes memory outcomes above unity");
      d.storage.loss = std::max(0.0, d.storage.loss - d.second_order_echo);
    }
  } else {
    d.storage = {0.0, 1.0, 0.0};
  }

  if (cfg.link.enabled) {
    d.link_transmission =
        cfg.link.interconnect_transmission * cfg.link.collection_efficiency * fiber_transmission(cfg.link.fiber);
    d.fiber_delay_us = fiber_delay_us(cfg.link.fiber);
  }
  d.gated = cfg.gating.enabled;
  if (d.gated) {
    d.aom_transmission = cfg.gating.aom_transmission;
    d.cycle_us = cfg.gating.window.cycle_us();
    d.t_on_us = cfg.gating.window.t_on_us;
    d.tau_d_us = cfg.gating.window.tau_d_us;
  } else {
    d.cycle_us = kUngatedChunkUs;
    d.t_on_us = kUngatedChunkUs;
    d.tau_d_us = 0.0;
  }
  const double live = cfg.run.duration_s * cfg.run.storage_duty;
  d.cycles = static_cast<std::uint64_t>(std::floor(live / (d.cycle_us * 1e-6)));
  d.live_time_s = static_cast<double>(d.cycles) * d.cycle_us * 1e-6;
  return d;
}

TimeTagStream generate(const ScenarioConfig& cfg, const GenerateOptions& options) {
  const DerivedScenario d = derive(cfg);
  CyclePlan plan;
  plan.cycle_ps = d.cycle_us * 1e6;
  plan.t_on_ps = d.t_on_us * 1e6;
  plan.gated = d.gated;
  plan.tau_d_ps = d.tau_d_us * 1e6;
  plan.tau_afc_ps = d.tau_afc_us * 1e6;
  plan.echo_sigma_ps = d.echo_fwhm_ns * 1e3 / constants::fwhm_per_sigma;
  plan.fiber_offset_ps = cfg.link.compensate_delay ? 0.0 : d.fiber_delay_us * 1e6;
  plan.tau_c_ps = d.correlation_time_ns * 1e3;
  plan.symmetric = d.shape == CorrelationShape::symmetric;
  const double cycle_s = d.cycle_us * 1e-6;
  plan.pairs = PoissonSampler(d.pair_rate_cps * cycle_s);
  plan.herald_only = PoissonSampler((d.herald_singles_cps - d.pair_rate_cps) * cycle_s);
  plan.signal_only = PoissonSampler((d.signal_singles_cps - d.pair_rate_cps) * cycle_s);
  plan.herald_dark = PoissonSampler(cfg.detectors.herald_dark_cps * cycle_s);
  plan.signal_dark = PoissonSampler(cfg.detectors.signal_dark_cps * cycle_s);
  plan.memory_noise = PoissonSampler(cfg.memory.enabled ? cfg.memory.noise_rate_cps * cycle_s : 0.0);
  plan.herald_eff = cfg.detectors.herald_efficiency;
  plan.signal_eff = cfg.detectors.signal_efficiency;
  plan.link = d.link_transmission;
  plan.aom = d.aom_transmission;
  plan.p_echo = d.storage.echo;
  plan.p_echo2 = d.second_order_echo;
  plan.p_transmit = d.storage.transmit;
  plan.split = cfg.detectors.hbt_split;
  plan.raw_herald = cfg.detectors.emit_raw_herald;
  plan.end_ps = static_cast<std::int64_t>(d.cycles) * static_cast<std::int64_t>(plan.cycle_ps);

  const std::uint64_t blocks = (d.cycles + kCyclesPerBlock - 1) / kCyclesPerBlock;
  std::vector<std::vector<TimeTag>> parts(blocks);
  const double expected_per_cycle =
      (d.herald_singles_cps * (cfg.detectors.emit_raw_herald ? 2.0 : 1.0) + d.signal_singles_cps +
       cfg.detectors.herald_dark_cps + 2.0 * cfg.detectors.signal_dark_cps) * cycle_s;
  parallel_for(blocks, resolve_jobs(options.jobs), [&](std::size_t b) {
    const std::uint64_t first = b * kCyclesPerBlock;
    const std::uint64_t last = std::min<std::uint64_t>(d.cycles, first + kCyclesPerBlock);
    auto& out = parts[b];
    out.reserve(static_cast<std::size_t>(expected_per_cycle * static_cast<double>(last - first) * 1.1) + 16);
    for (std::uint64_t c = first; c < last; ++c) run_cycle(plan, cfg.run.seed, c, out);
  });

  TimeTagStream stream;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  stream.events.reserve(total);
  for (auto& p : parts) {
    stream.events.insert(stream.events.end(), p.begin(), p.end());
    std::vector<TimeTag>().swap(p);
  }
  std::sort(stream.events.begin(), stream.events.end(), [](const TimeTag& a, const TimeTag& b) {
    return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps : a.channel < b.channel;
  });
  stream.metadata.scenario_hash = scenario_hash(cfg);
  stream.metadata.seed = cfg.run.seed;
  stream.metadata.duration_s = cfg.run.duration_s;
  stream.metadata.live_time_s = d.live_time_s;
  return stream;
}

std::optional<int> ModeSchedule::mode_of(std::uint64_t ts) const {
  const auto cycle_ps = static_cast<std::uint64_t>(std::llround(cycle_us * 1e6));
  const double phase_ns = 1e-3 * static_cast<double>(ts % cycle_ps);
  const auto mode = static_cast<int>(std::floor(phase_ns / slot_ns));
  if (mode < 0 || mode >= modes) return std::nullopt;
  return mode;
}

int max_modes(double t_on_us, double slot_ns) {
  if (!(slot_ns > 0.0)) throw Error(ErrorCode::domain_error, "slot must be > 0");
  return static_cast<int>(std::floor(t_on_us * 1e3 / slot_ns + 1e-9));
}

ModeSchedule multimode_windows(const ScenarioConfig& cfg, int modes, double slot_ns) {
  if (modes < 1) throw Error(ErrorCode::domain_error, "mode count must be >= 1");
  const double t_on = cfg.gating.enabled ? cfg.gating.window.t_on_us : kUngatedChunkUs;
  if (modes > max_modes(t_on, slot_ns))
    throw Error(ErrorCode::window_overflow, "modes * slot exceeds the on-gate length");
  ModeSchedule s;
  s.modes = modes;
  s.slot_ns = slot_ns;
  s.cycle_us = cfg.gating.enabled ? cfg.gating.window.cycle_us() : kUngatedChunkUs;
  s.t_on_us = t_on;
  return s;
}

}  // namespace hqnet
