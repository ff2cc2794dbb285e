#include "hqnet/cli.h"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <random>
#include <sstream>

#include "hqnet/analysis.h"
#include "hqnet/memory.h"
#include "hqnet/scenario.h"
#include "hqnet/simulate.h"
#include "hqnet/source.h"
#include "hqnet/spectral.h"
#include "hqnet/superhyperfine.h"
#include "hqnet/sweep.h"

#ifndef HQNET_VERSION
#define HQNET_VERSION "0.0.0"
#endif

namespace hqnet {

namespace {

using Json = nlohmann::ordered_json;

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, std::ostream& err) {
  if (seed) return *seed;
  const auto drawn = entropy_seed();
  err << "hqnet: no --seed given; using seed " << drawn << " drawn from entropy\n";
  return drawn;
}

std::string text_of(const Histogram& h) {
  std::ostringstream s;
  h.write_csv(s);
  return s.str();
}

Json correlation_json(const CorrelationResult& r, double acquisition_s) {
  Json j;
  j["g2_max"] = r.g2_max;
  j["g2_stderr"] = r.g2_stderr;
  j["lower_bound"] = r.lower_bound;
  j["peak_delay_ps"] = r.peak_delay_ps;
  j["peak_width_ps"] = r.peak_width_ps;
  j["amplitude_per_bin"] = r.amplitude_per_bin;
  j["background_per_bin"] = r.background_per_bin;
  j["background_stderr"] = r.background_stderr;
  j["background_reduced_chi2"] = r.background_reduced_chi2;
  j["fit_kind"] = to_string(r.fit_kind);
  j["peak_family"] = to_string(r.peak_family);
  j["net_counts"] = r.net_counts;
  j["net_counts_stderr"] = r.net_counts_stderr;
  if (acquisition_s > 0.0) {
    j["rate_cps"] = r.net_counts / acquisition_s;
    j["rate_stderr_cps"] = r.net_counts_stderr / acquisition_s;
  }
  return j;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::config_invalid, "cannot parse value '" + item + "'");
    }
  }
  return values;
}

void emit(const Json& j, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << j.dump(2) << '\n';
  } else {
    write_text_atomic(path, j.dump(2) + "\n");
  }
}

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  int jobs = 1;
};

int run_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  ScenarioConfig cfg = load_scenario(a.scenario);
  if (a.duration) {
    if (!(*a.duration > 0.0)) throw Error(ErrorCode::config_invalid, "--duration must be > 0");
    cfg.run.duration_s = *a.duration;
  }
  cfg.run.seed = resolve_seed(a.seed, err);
  GenerateOptions options;
  options.jobs = a.jobs;
  TimeTagStream stream = generate(cfg, options);
  stream.metadata.tool_version = tool_version();
  write_hqtt(a.out, stream);
  write_metadata(metadata_path(a.out), stream.metadata);
  write_text_atomic(a.out + ".scenario.toml", serialize(cfg));
  out << "wrote " << stream.events.size() << " events to " << a.out << " (scenario " << stream.metadata.scenario_hash
      << ", seed " << cfg.run.seed << ")\n";
  return 0;
}

struct AnalyzeArgs {
  std::string stream;
  std::string scenario;
  std::string json;
  std::string csv_prefix;
  bool force = false;
  MeasureSettings measure;
  double window_ns = 0.2;
  int dn_max = 10;
  int modes = 0;
  double slot_ns = 20.0;
  int jobs = 1;
};

int run_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  const StreamMetadata meta = read_metadata(metadata_path(a.stream));
  TimeTagStream stream = read_hqtt(a.stream);
  stream.metadata = meta;
  ScenarioConfig cfg = load_scenario(a.scenario.empty() ? a.stream + ".scenario.toml" : a.scenario);
  cfg.run.seed = meta.seed;
  cfg.run.duration_s = meta.duration_s;
  const std::string hash = scenario_hash(cfg);
  if (hash != meta.scenario_hash) {
    const std::string msg = "scenario hash " + hash + " does not match stream metadata " + meta.scenario_hash;
    if (!a.force) throw Error(ErrorCode::metadata_mismatch, msg + " (use --force to analyse anyway)");
    err << "hqnet: warning: " << msg << "\n";
  }

  Json j;
  j["scenario_hash"] = meta.scenario_hash;
  j["seed"] = meta.seed;
  j["duration_s"] = meta.duration_s;
  j["live_time_s"] = meta.live_time_s;
  j["tool_version"] = tool_version();
  Json counts;
  for (std::uint8_t ch = 0; ch < stream.channel_count; ++ch) counts[std::to_string(ch)] = stream.count(ch);
  j["events_per_channel"] = counts;

  const std::string prefix = a.csv_prefix.empty() ? a.stream : a.csv_prefix;
  auto analyse = [&](const char* name, auto&& make_hist, auto&& fit) {
    try {
      const Histogram h = make_hist();
      write_text_atomic(prefix + "_" + name + ".csv", text_of(h));
      j[name] = correlation_json(fit(h), h.acquisition_s);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::insufficient_statistics && e.code() != ErrorCode::eigen_failure) throw;
      j[name] = Json{{"error", e.what()}};
    }
  };
  analyse(
      "source", [&] { return source_histogram(stream, cfg, a.measure); },
      [&](const Histogram& h) { return fit_source_peak(h, cfg); });
  if (cfg.memory.enabled) {
    analyse(
        "echo", [&] { return echo_histogram(stream, cfg, a.measure); },
        [&](const Histogram& h) { return fit_echo_peak(h, cfg); });
  }
  if (cfg.detectors.hbt_split) {
    try {
      AutoG2Options o;
      o.window_ns = a.window_ns;
      o.dn_max = a.dn_max;
      o.window_start_ns = direct_peak_delay_ps(cfg) * 1e-3 - 0.5 * a.window_ns;
      const auto r = heralded_auto_g2(stream, kHeraldChannel, kSignalChannel, kSignalBChannel, o);
      j["heralded_auto_g2"] = Json{{"g2_0", r.g2},           {"g2_stderr", r.g2_stderr},
                                   {"heralds", r.heralds},   {"triples", r.triples},
                                   {"mean_offset_triples", r.mean_offset_triples}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::insufficient_statistics) throw;
      j["heralded_auto_g2"] = Json{{"error", e.what()}};
    }
  }
  if (a.modes > 0) {
    auto options = multimode_options(cfg, a.measure);
    options.jobs = a.jobs;
    const auto stats = multimode_stats(stream, multimode_windows(cfg, a.modes, a.slot_ns), options);
    std::ostringstream csv;
    csv.precision(10);
    csv << "# scenario_hash=" << meta.scenario_hash << "\n";
    csv << "mode,rate_cps,rate_stderr_cps,cumulative_rate_cps,g2,g2_stderr\n";
    Json modes = Json::array();
    for (std::size_t m = 0; m < stats.modes.size(); ++m) {
      const auto& s = stats.modes[m];
      csv << s.mode << ',' << s.rate_cps << ',' << s.rate_stderr << ',' << stats.cumulative_rate_cps[m] << ','
          << s.correlation.g2_max << ',' << s.correlation.g2_stderr << '\n';
      modes.push_back(Json{{"mode", s.mode},
                           {"rate_cps", s.rate_cps},
                           {"rate_stderr_cps", s.rate_stderr},
                           {"g2", s.correlation.g2_max},
                           {"g2_stderr", s.correlation.g2_stderr}});
    }
    write_text_atomic(prefix + "_modes.csv", csv.str());
    j["multimode"] = Json{{"slot_ns", a.slot_ns},
                          {"modes", modes},
                          {"cumulative_slope_cps_per_mode", stats.cumulative_fit.slope},
                          {"cumulative_r_squared", stats.cumulative_fit.r_squared},
                          {"g2_slope_per_mode", stats.g2_trend.slope},
                          {"g2_slope_stderr", stats.g2_trend.slope_stderr}};
  }
  emit(j, a.json.empty() ? a.stream + ".analysis.json" : a.json, out);
  if (!a.json.empty() && a.json != "-") out << "wrote " << a.json << "\n";
  return 0;
}

struct SweepArgs {
  std::string scenario;
  std::string parameter;
  std::string values;
  int repeats = 1;
  std::string metric = "echo_rate";
  bool expected = false;
  std::string out;
  std::string point_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  int jobs = 1;
};

int run_sweep_command(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  ScenarioConfig cfg = load_scenario(a.scenario);
  if (a.duration) cfg.run.duration_s = *a.duration;
  SweepSpec spec;
  spec.parameter = a.parameter;
  spec.values = parse_list(a.values);
  spec.repeats = a.repeats;
  spec.metric = parse_metric(a.metric);
  spec.mode = a.expected ? SweepMode::expected : SweepMode::simulate;
  if (!a.expected) cfg.run.seed = resolve_seed(a.seed, err);
  SweepOptions options;
  options.jobs = a.jobs;
  if (!a.point_dir.empty()) options.point_dir = a.point_dir;
  const auto rows = run_sweep(spec, cfg, options);
  const std::string csv = "# scenario_hash=" + scenario_hash(cfg) + "\n" + sweep_csv(spec, rows);
  if (a.out.empty() || a.out == "-") {
    out << csv;
  } else {
    write_text_atomic(a.out, csv);
    out << "wrote " << rows.size() << " rows to " << a.out << "\n";
  }
  return 0;
}

struct DesignArgs {
  double depth = 4.5;
  double background_depth = 0.0;
  double bandwidth = 100.0;
  double input_fwhm = 43.0;
  double spacing = 1.0;
  std::string spacings = "0.333,0.5,0.99,1,2,4";
  std::string out;
  std::string finesse_csv;
};

int run_design_afc(const DesignArgs& a, std::ostream& out) {
  if (!(a.depth > 0.0) || a.background_depth < 0.0 || !(a.bandwidth > 0.0) || !(a.input_fwhm > 0.0))
    throw Error(ErrorCode::config_invalid, "depth, bandwidth and input fwhm must be > 0; background depth >= 0");
  const auto best = optimal_finesse(a.depth, a.background_depth);
  AfcConfig afc;
  afc.tooth_optical_depth = a.depth;
  afc.background_depth = a.background_depth;
  afc.comb_bandwidth_mhz = a.bandwidth;
  afc.comb_spacing_mhz = a.spacing;
  afc.finesse = std::max(1.0, best.finesse);
  validate(afc);

  Json j;
  j["tooth_optical_depth"] = a.depth;
  j["background_depth"] = a.background_depth;
  j["optimal_finesse"] = best.finesse;
  j["optimal_efficiency"] = best.efficiency;
  Json table = Json::array();
  for (double s : parse_list(a.spacings)) {
    AfcConfig c = afc;
    c.comb_spacing_mhz = s;
    validate(c);
    const auto e = echo_parameters(c);
    table.push_back(Json{{"spacing_MHz", s}, {"storage_time_us", e.storage_time_us}, {"echo_fwhm_ns", e.echo_fwhm_ns}});
  }
  j["storage_times"] = table;
  const SpectralFeature input{0.0, a.input_fwhm, 1.0, LineShape::gaussian};
  const double in_band = feature_fraction_in_window(input, 0.0, a.bandwidth);
  j["input_fwhm_MHz"] = a.input_fwhm;
  j["comb_bandwidth_MHz"] = a.bandwidth;
  j["in_band_fraction"] = in_band;
  j["bandwidth_penalty"] = 1.0 - in_band;
  j["effective_efficiency"] = best.efficiency * in_band;
  j["warning"] = a.input_fwhm > a.bandwidth ? "input bandwidth exceeds the comb bandwidth" : "";
  emit(j, a.out, out);

  if (!a.finesse_csv.empty()) {
    std::ostringstream csv;
    csv << "F,eta\n";
    csv.precision(10);
    for (int i = 10; i <= 200; ++i) {
      const double f = 0.1 * i;
      csv << f << ',' << afc_efficiency(a.depth, f, a.background_depth) << '\n';
    }
    write_text_atomic(a.finesse_csv, csv.str());
  }
  return 0;
}

struct LevelsArgs {
  double field = 1.0;
  double g_ground = 3.54;
  double g_excited = 4.51;
  double bin_mhz = 1.0;
  std::string out_prefix;
};

int run_levels(const LevelsArgs& a, std::ostream& out) {
  const auto sites = vanadium_neighbours();
  const Vec3 applied{0.0, 0.0, a.field};
  std::ostringstream levels;
  levels << "site,state,level,energy_MHz\n";
  levels.precision(12);
  for (std::size_t s = 0; s < sites.size(); ++s) {
    for (auto state : {ElectronicState::ground, ElectronicState::excited}) {
      const double g = state == ElectronicState::ground ? a.g_ground : a.g_excited;
      const auto set = spin_levels(sites[s], dipolar_field(sites[s], g, applied), state);
      for (std::size_t k = 0; k < set.energies_mhz.size(); ++k)
        levels << s << ',' << (state == ElectronicState::ground ? "ground" : "excited") << ',' << k << ','
               << set.energies_mhz[k] << '\n';
    }
  }
  const Histogram band = band_spectrum(sites, a.g_ground, a.field, a.bin_mhz);
  std::size_t first = band.size();
  std::size_t last = 0;
  for (std::size_t i = 0; i < band.size(); ++i) {
    if (band.counts[i] == 0) continue;
    first = std::min(first, i);
    last = i;
  }
  const auto nearest = spin_levels(sites.front(), dipolar_field(sites.front(), a.g_ground, applied));
  Json j;
  j["field_T"] = a.field;
  j["nearest_central_spacing_MHz"] = central_spacing_mhz(nearest);
  j["nearest_transition_spacing_kHz"] = transition_spacing_khz(sites.front(), a.g_ground, a.g_excited, a.field);
  j["next_nearest_transition_spacing_kHz"] = transition_spacing_khz(sites.back(), a.g_ground, a.g_excited, a.field);
  j["band_span_MHz"] = first < band.size() ? band.bin_low(last) + band.bin_width - band.bin_low(first) : 0.0;
  if (!a.out_prefix.empty()) {
    write_text_atomic(a.out_prefix + "_levels.csv", levels.str());
    write_text_atomic(a.out_prefix + "_band.csv", text_of(band));
  }
  emit(j, "", out);
  return 0;
}

struct MatchArgs {
  std::string scenario;
  std::optional<double> delta2;
  double absorber_depth = 4.5;
  std::string out_prefix;
};

int run_match(const MatchArgs& a, std::ostream& out) {
  ScenarioConfig cfg;
  cfg.source.spectrum = default_source_spectrum();
  if (!a.scenario.empty()) cfg = load_scenario(a.scenario);
  const double delta2 = a.delta2.value_or(cfg.source.operating_delta2_mhz);
  const double shift = feature_center(cfg.source.model, delta2);
  SpectralProfile shifted = cfg.source.spectrum;
  for (auto& f : shifted.features) f.center_mhz += shift;
  const auto& afc = cfg.memory.afc;

  AbsorptionProfile absorber;
  absorber.profile.features = {{afc.comb_center_mhz, cfg.memory.transition.inhomogeneous_fwhm_mhz, 1.0,
                                LineShape::lorentzian}};
  absorber.peak_optical_depth = a.absorber_depth;
  const auto filtered = notch_filter(shifted, absorber);

  Json j;
  if (!a.scenario.empty()) j["scenario_hash"] = scenario_hash(cfg);
  j["delta2_MHz"] = delta2;
  j["feature_shift_MHz"] = shift;
  j["total_weight"] = shifted.total_weight();
  j["in_band_fraction"] = absorbed_fraction(shifted, afc.comb_center_mhz, afc.comb_bandwidth_mhz);
  j["comb_center_MHz"] = afc.comb_center_mhz;
  j["comb_bandwidth_MHz"] = afc.comb_bandwidth_mhz;
  j["absorber_fwhm_MHz"] = cfg.memory.transition.inhomogeneous_fwhm_mhz;
  j["absorber_depth"] = a.absorber_depth;
  j["notch_transmitted_fraction"] = filtered.transmitted_fraction;
  Json features = Json::array();
  for (const auto& f : shifted.features) {
    const double inside = feature_fraction_in_window(f, afc.comb_center_mhz, afc.comb_bandwidth_mhz);
    features.push_back(Json{{"center_MHz", f.center_mhz}, {"fwhm_MHz", f.fwhm_mhz}, {"weight", f.weight},
                            {"in_band_share", inside}});
  }
  j["features"] = features;
  if (!a.out_prefix.empty()) {
    std::ostringstream csv;
    csv.precision(12);
    csv << "nu_MHz,input_density_per_MHz,transmitted_density_per_MHz\n";
    for (std::size_t i = 0; i < filtered.density.size(); ++i)
      csv << filtered.nu_at(i) << ',' << density(shifted, filtered.nu_at(i)) << ',' << filtered.density[i] << '\n';
    write_text_atomic(a.out_prefix + "_spectrum.csv", csv.str());
  }
  emit(j, "", out);
  return 0;
}

}  // namespace

const char* tool_version() { return HQNET_VERSION; }

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config_invalid:
    case ErrorCode::domain_error:
    case ErrorCode::window_overflow:
    case ErrorCode::probability_overflow:
    case ErrorCode::grid_too_coarse:
      return kExitConfig;
    case ErrorCode::io_error:
      return kExitIo;
    case ErrorCode::metadata_mismatch:
      return kExitMismatch;
    default:
      return kExitAnalysis;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid quantum network simulator and analysis toolkit", "hqnet"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a time-tag stream from a scenario");
  simulate->add_option("--scenario", sim.scenario, "Scenario file")->required();
  simulate->add_option("--out", sim.out, "Output HQTT file")->required();
  simulate->add_option("--seed", sim.seed, "Random seed; drawn from entropy when omitted");
  simulate->add_option("--duration", sim.duration, "Acquisition time in seconds");
  simulate->add_option("--jobs", sim.jobs, "Worker threads (HQNET_JOBS overrides)");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Correlation analysis of an HQTT stream");
  analyze->add_option("--stream", an.stream, "HQTT file")->required();
  analyze->add_option("--scenario", an.scenario, "Scenario file; defaults to the copy written by simulate");
  analyze->add_option("--json", an.json, "Result JSON path, '-' for stdout");
  analyze->add_option("--csv-prefix", an.csv_prefix, "Prefix of the histogram CSV files");
  analyze->add_flag("--force", an.force, "Analyse even when the scenario hash differs");
  analyze->add_option("--source-bin-ps", an.measure.source_bin_ps, "Bin of the source histogram");
  analyze->add_option("--source-range-ps", an.measure.source_half_range_ps, "Half-range of the source histogram");
  analyze->add_option("--echo-bin-ps", an.measure.echo_bin_ps, "Bin of the echo histogram");
  analyze->add_option("--echo-range-ps", an.measure.echo_half_range_ps, "Half-range of the echo histogram");
  analyze->add_option("--window-ns", an.window_ns, "Heralded auto-correlation window");
  analyze->add_option("--dn-max", an.dn_max, "Largest herald offset in the auto-correlation");
  analyze->add_option("--modes", an.modes, "Per-mode echo analysis over this many herald slots");
  analyze->add_option("--slot-ns", an.slot_ns, "Width of one herald slot");
  analyze->add_option("--jobs", an.jobs, "Worker threads for the per-mode fits (HQNET_JOBS overrides)");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Sweep one scenario parameter and tabulate a metric");
  sweep->add_option("--scenario", sw.scenario, "Scenario file")->required();
  sweep->add_option("--param", sw.parameter, "Dotted scenario key, e.g. link.length_km")->required();
  sweep->add_option("--values", sw.values, "Comma-separated values")->required();
  sweep->add_option("--repeats", sw.repeats, "Seeds per point");
  sweep->add_option("--metric", sw.metric, "echo_rate, g2_he, g2_hs or efficiency");
  sweep->add_flag("--expected", sw.expected, "Evaluate the closed-form expectation instead of simulating");
  sweep->add_option("--out", sw.out, "Output CSV, '-' for stdout");
  sweep->add_option("--points-dir", sw.point_dir, "Directory for per-point JSON results");
  sweep->add_option("--seed", sw.seed, "Base seed; drawn from entropy when omitted");
  sweep->add_option("--duration", sw.duration, "Acquisition time per point in seconds");
  sweep->add_option("--jobs", sw.jobs, "Concurrent points (HQNET_JOBS overrides)");

  DesignArgs de;
  auto* design = app.add_subcommand("design-afc", "Comb finesse optimum, storage times and bandwidth match");
  design->add_option("--depth", de.depth, "Tooth optical depth d");
  design->add_option("--background-depth", de.background_depth, "Background optical depth d0");
  design->add_option("--bandwidth", de.bandwidth, "Comb bandwidth in MHz");
  design->add_option("--input-fwhm", de.input_fwhm, "Input photon fwhm in MHz");
  design->add_option("--spacing", de.spacing, "Comb spacing in MHz");
  design->add_option("--spacings", de.spacings, "Comma-separated spacings for the storage-time table");
  design->add_option("--out", de.out, "Report JSON path");
  design->add_option("--finesse-csv", de.finesse_csv, "Efficiency against finesse as CSV");

  LevelsArgs lv;
  auto* levels = app.add_subcommand("levels", "Super-hyperfine levels of the vanadium neighbours");
  levels->add_option("--field", lv.field, "Applied field along c in tesla");
  levels->add_option("--g-ground", lv.g_ground, "Er ground g factor along c");
  levels->add_option("--g-excited", lv.g_excited, "Er excited g factor along c");
  levels->add_option("--bin-mhz", lv.bin_mhz, "Band histogram bin");
  levels->add_option("--out-prefix", lv.out_prefix, "Prefix for the level and band CSV files");

  MatchArgs ma;
  auto* match = app.add_subcommand("match", "Spectral matching of the photon spectrum to the memory");
  match->add_option("--scenario", ma.scenario, "Scenario file; built-in defaults when omitted");
  match->add_option("--delta2", ma.delta2, "Two-photon pump detuning in MHz");
  match->add_option("--absorber-depth", ma.absorber_depth, "Peak optical depth of the Er line");
  match->add_option("--out-prefix", ma.out_prefix, "Prefix for the sampled spectrum CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim, out, err);
    if (analyze->parsed()) return run_analyze(an, out, err);
    if (sweep->parsed()) return run_sweep_command(sw, out, err);
    if (design->parsed()) return run_design_afc(de, out);
    if (levels->parsed()) return run_levels(lv, out);
    if (match->parsed()) return run_match(ma, out);
  } catch (const Error& e) {
    err << "hqnet: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "hqnet: " << e.what() << "\n";
    return kExitAnalysis;
  }
  return kExitUsage;
}

}  // namespace hqnet
