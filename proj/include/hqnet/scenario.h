#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hqnet/link.h"
#include "hqnet/memory.h"
#include "hqnet/source.h"
#include "hqnet/spectral.h"

namespace hqnet {

enum class SinglesModel {
  rates,      // signal singles taken as configured
  g2_target,  // signal singles chosen so the detected peak reaches g2_cross_max
};

struct SourceSection {
  SourceConfig model;           // reference point for rates, powers and spectrum
  double operating_delta2_mhz = 903.0;
  double pump1_mw = 1.0;
  double pump2_mw = 1.0;
  SinglesModel singles_model = SinglesModel::rates;
  std::string operating_table;  // CSV path, relative to the scenario file; empty for none
  SpectralProfile spectrum;
  bool spectrum_illustrative = true;

  friend bool operator==(const SourceSection&, const SourceSection&) = default;
};

struct MemorySection {
  bool enabled = true;
  AfcConfig afc;
  ErTransitionConfig transition;
  double field_t = 1.0;
  double efficiency = -1.0;  // negative: derive from the comb parameters
  double polarization_factor = 0.5;
  double noise_rate_cps = 0.0;  // memory-emitted noise reaching the signal detector
  bool second_order_echo = false;

  friend bool operator==(const MemorySection&, const MemorySection&) = default;
};

struct LinkSection {
  bool enabled = true;
  FiberConfig fiber;
  double interconnect_transmission = 0.45;
  double collection_efficiency = 0.18;
  bool compensate_delay = true;

  friend bool operator==(const LinkSection&, const LinkSection&) = default;
};

struct GatingSection {
  bool enabled = true;
  GatingConfig window;
  double aom_transmission = 0.70;

  friend bool operator==(const GatingSection&, const GatingSection&) = default;
};

struct DetectorSection {
  double herald_efficiency = 1.0;
  double signal_efficiency = 1.0;
  double herald_dark_cps = 0.0;
  double signal_dark_cps = 0.0;  // per signal detector
  bool hbt_split = false;
  bool emit_raw_herald = false;

  friend bool operator==(const DetectorSection&, const DetectorSection&) = default;
};

struct RunSection {
  double duration_s = 1.0;    // wall-clock acquisition time
  std::uint64_t seed = 1;
  double storage_duty = 0.476;  // share of wall time with the storage window open

  friend bool operator==(const RunSection&, const RunSection&) = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  SourceSection source;
  MemorySection memory;
  LinkSection link;
  GatingSection gating;
  DetectorSection detectors;
  RunSection run;
  std::filesystem::path base_dir;  // resolves relative paths; not serialised
};

// Parses the TOML-style scenario text. Throws Error(config_invalid) with a
// "line N" or key diagnostic.
ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Canonical text with every field; parse_scenario(serialize(x)) == x.
std::string serialize(const ScenarioConfig& cfg);

// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string scenario_hash(const ScenarioConfig& cfg);

// Returns a copy with one dotted key replaced; throws config_invalid when the key is unknown.
ScenarioConfig with_value(const ScenarioConfig& cfg, const std::string& dotted_key, double value);

// Bypasses memory, link and gating: the configuration used to characterise the source alone.
ScenarioConfig source_characterisation(const ScenarioConfig& cfg);

// Six-Gaussian decomposition of the signal spectrum; only the main feature is constrained.
SpectralProfile default_source_spectrum();

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

}  // namespace hqnet
