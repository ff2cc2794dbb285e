#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hqnet/analysis.h"
#include "hqnet/scenario.h"
#include "hqnet/timetag.h"

namespace hqnet {

struct MeasureSettings {
  double source_bin_ps = 50.0;
  double source_half_range_ps = 20e3;
  double echo_bin_ps = 500.0;
  double echo_half_range_ps = 150e3;
};

// Delay of the direct and echo peaks for cfg, in ps.
double direct_peak_delay_ps(const ScenarioConfig& cfg);
double echo_peak_delay_ps(const ScenarioConfig& cfg);

// Herald to signal-arm-A histograms around the direct and echo peaks, and their fits.
Histogram source_histogram(const TimeTagStream& stream, const ScenarioConfig& cfg, const MeasureSettings& s = {});
Histogram echo_histogram(const TimeTagStream& stream, const ScenarioConfig& cfg, const MeasureSettings& s = {});
CorrelationResult fit_source_peak(const Histogram& hist, const ScenarioConfig& cfg);
CorrelationResult fit_echo_peak(const Histogram& hist, const ScenarioConfig& cfg);

// Per-mode echo fits for cfg's gate, comb and echo width.
MultimodeOptions multimode_options(const ScenarioConfig& cfg, const MeasureSettings& s = {});

enum class SweepMetric { echo_rate, g2_he, g2_hs, efficiency };
enum class SweepMode { simulate, expected };

SweepMetric parse_metric(const std::string& name);
std::string to_string(SweepMetric metric);

struct SweepSpec {
  std::string parameter;  // dotted scenario key
  std::vector<double> values;
  int repeats = 1;  // seeds per point
  SweepMetric metric = SweepMetric::echo_rate;
  SweepMode mode = SweepMode::simulate;
};

struct SweepRow {
  double value = 0.0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  int repeats = 0;
};

struct SweepOptions {
  int jobs = 1;
  std::optional<std::filesystem::path> point_dir;  // one JSON file per point, written atomically
  MeasureSettings measure;
};

// Seed of one repeat, derived from the scenario seed, point index and repeat index.
std::uint64_t sweep_seed(std::uint64_t base, std::size_t point, int repeat);

// One metric value for cfg by simulation and analysis; stderr of that value in `stderr_out`.
double measure_metric(const ScenarioConfig& cfg, SweepMetric metric, const MeasureSettings& s,
                      double* stderr_out = nullptr);
double expected_metric(const ScenarioConfig& cfg, SweepMetric metric);

// Point failures are rethrown with the point index and value prepended.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const ScenarioConfig& cfg, const SweepOptions& options = {});

std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows);

}  // namespace hqnet
