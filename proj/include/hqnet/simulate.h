#pragma once

#include <optional>

#include "hqnet/memory.h"
#include "hqnet/scenario.h"
#include "hqnet/timetag.h"

namespace hqnet {

// Scenario quantities after applying pumps, operating table, spectrum and loss chain.
struct DerivedScenario {
  double pair_rate_cps = 0.0;  // at the source output
  double herald_singles_cps = 0.0;
  double signal_singles_cps = 0.0;
  double g2_cross_max = 1.0;
  CorrelationShape shape = CorrelationShape::symmetric;
  double correlation_time_ns = 0.32;

  double in_band_fraction = 0.0;
  double eta_afc = 0.0;
  StorageOutcome storage;            // echo / transmit / loss per photon reaching the memory
  double second_order_echo = 0.0;    // echo at twice the storage time
  double link_transmission = 1.0;    // interconnect * collection * fiber
  double aom_transmission = 1.0;
  double fiber_delay_us = 0.0;
  double tau_afc_us = 0.0;
  double echo_fwhm_ns = 0.0;

  bool gated = false;
  double cycle_us = 0.0;
  double t_on_us = 0.0;  // herald and signal gate length; the full cycle when ungated
  double tau_d_us = 0.0;
  std::uint64_t cycles = 0;
  double live_time_s = 0.0;

  double gate_fraction() const { return t_on_us / cycle_us; }
};

// Throws Error(config_invalid) on inconsistent settings and probability_overflow
// when the storage outcomes exceed unity.
DerivedScenario derive(const ScenarioConfig& cfg);

struct GenerateOptions {
  int jobs = 1;
};

// Events are sorted by (timestamp, channel); output depends only on cfg.
TimeTagStream generate(const ScenarioConfig& cfg, const GenerateOptions& options = {});

// Herald-gate partition into equal slots starting at the gate opening.
struct ModeSchedule {
  int modes = 1;
  double slot_ns = 20.0;
  double cycle_us = 2.0;
  double t_on_us = 0.8;

  // Mode index of a herald at `timestamp_ps`, or nullopt outside every slot.
  std::optional<int> mode_of(std::uint64_t timestamp_ps) const;
  double slot_start_us(int mode) const { return 1e-3 * slot_ns * mode; }
};

int max_modes(double t_on_us, double slot_ns);

// Throws window_overflow when modes * slot exceeds the on-gate.
ModeSchedule multimode_windows(const ScenarioConfig& cfg, int modes, double slot_ns = 20.0);

}  // namespace hqnet
