#pragma once

#include <cstdint>

#include "hqnet/scenario.h"
#include "hqnet/simulate.h"
#include "hqnet/timetag.h"

namespace hqnet {

// Closed-form rates of the generator, per live second, for one herald channel
// and the selected signal detectors.
struct ChannelRates {
  double herald_instant_cps = 0.0;   // detected herald rate while the herald gate is open
  double gate_fraction = 1.0;        // share of each cycle with the herald gate open
  double direct_instant_cps = 0.0;   // transmitted signal rate inside the direct window
  double echo_instant_cps = 0.0;     // echo rate inside the echo window
  double echo2_instant_cps = 0.0;    // second-order echo rate inside its window
  double floor_cps = 0.0;            // darks and memory noise, uniform in time
  double direct_window_start_us = 0.0;
  double echo_window_start_us = 0.0;
  double echo2_window_start_us = 0.0;
  double window_us = 0.0;
  double cycle_us = 0.0;
};

// arm_share is 1 for every signal detector together, 0.5 for one arm of a split.
ChannelRates channel_rates(const ScenarioConfig& cfg, const DerivedScenario& d, double arm_share = 1.0);

// Accidental coincidence density per live second per ns of delay.
double accidental_density_per_ns(const ChannelRates& r, double tau_us);

// Accidental coincidences per live second in the delay interval [lo, hi).
// Exact: the density is piecewise linear and is integrated between its kinks.
double accidental_rate_in(const ChannelRates& r, double lo_us, double hi_us);

// Peak of the herald-to-signal delay density after Gaussian jitter of sigma_ns.
double jittered_peak_per_ns(CorrelationShape shape, double tau_c_ns, double sigma_ns);

struct ExpectedPeak {
  double delay_us = 0.0;
  double coincidence_rate_cps = 0.0;  // per live second
  double peak_density_per_ns = 0.0;   // of the normalised delay distribution
  double background_per_ns = 0.0;     // accidental density at the peak, per live second
  double g2 = 1.0;
};

struct ExpectedCorrelation {
  ChannelRates rates;
  ExpectedPeak direct;
  ExpectedPeak echo;
  double live_fraction = 1.0;  // live seconds per wall second
};

ExpectedCorrelation expected_correlation(const ScenarioConfig& cfg, double arm_share = 1.0);

struct CalibratedPoint {
  double pair_rate_cps = 0.0;
  double g2_max = 1.0;
};

// Source pair rate and peak g2 at the reference powers that make the expected
// echo rate (per wall second) and echo g2 of cfg hit the targets. cfg must use
// the g2_target singles model and no operating table.
CalibratedPoint calibrate_operating_point(const ScenarioConfig& cfg, double echo_rate_cps, double echo_g2);

}  // namespace hqnet
