#pragma once

#include "hqnet/spectral.h"

namespace hqnet {

struct AfcConfig {
  double comb_spacing_mhz = 1.0;
  double comb_bandwidth_mhz = 100.0;
  double comb_center_mhz = 0.0;  // same reference as the photon spectrum
  double tooth_optical_depth = 4.5;
  double background_depth = 0.0;
  double finesse = 4.0;
  double echo_width_constant = 0.84;  // echo fwhm = constant / bandwidth

  friend bool operator==(const AfcConfig&, const AfcConfig&) = default;
};

// Throws Error(config_invalid) on bandwidth < spacing, finesse < 1 or negative depths.
void validate(const AfcConfig& afc);

struct ErTransitionConfig {
  double zero_field_frequency_ghz = 196044.6;
  double g_excited = 4.51;
  double g_ground = 3.54;
  double inhomogeneous_fwhm_mhz = 131.0;
  double electron_splitting_ghz_per_t = 46.7;
  double temperature_k = 0.15;

  friend bool operator==(const ErTransitionConfig&, const ErTransitionConfig&) = default;
};

void validate(const ErTransitionConfig& er);

// Shift of the lowest-branch optical transition, GHz. Negative is a red shift.
double zeeman_shift(const ErTransitionConfig& er, double field_t);

// Ground electron spin population in the lower Zeeman level.
double electron_polarization(const ErTransitionConfig& er, double field_t);

// Storage efficiency of a comb with Gaussian teeth. Throws domain_error if finesse < 1.
double afc_efficiency(double tooth_depth, double finesse, double background_depth);

struct FinesseOptimum {
  double finesse = 1.0;
  double efficiency = 0.0;
};

// Stationary point of afc_efficiency in finesse, from the quadratic in 1/F.
FinesseOptimum optimal_finesse(double tooth_depth, double background_depth);

struct EchoParameters {
  double storage_time_us = 0.0;
  double echo_fwhm_ns = 0.0;
};

EchoParameters echo_parameters(const AfcConfig& afc);

// Transmission of in-band light that the comb fails to absorb.
double comb_leakage(const AfcConfig& afc);

struct HoleDecayModel {
  double amplitude_fast = 0.0;
  double amplitude_middle = 0.0;
  double amplitude_slow = 0.0;
  double amplitude_const = 0.0;
  double tau_fast_ms = 1.0;
  double tau_middle_s = 1.0;
  double tau_slow_min = 1.0;
};

// Fast amplitude and the constant floor are illustrative; the two slow
// components carry 14.5 % and 85.5 % of the slow weight.
HoleDecayModel measured_hole_decay();

double hole_depth(const HoleDecayModel& model, double t_wait_s);

struct StorageOutcome {
  double echo = 0.0;      // absorbed and re-emitted after the storage time
  double transmit = 0.0;  // passes straight through
  double loss = 0.0;      // absorbed without re-emission
};

// Throws probability_overflow when echo + transmit exceeds 1.
StorageOutcome storage_outcome(double in_band_fraction, double polarization_factor, double eta_afc,
                               double in_band_leakage);

// In-band fraction is the share of the feature's weight inside the comb bandwidth.
StorageOutcome storage_outcome(const SpectralFeature& photon, const AfcConfig& afc, double eta_afc,
                               double polarization_factor = 0.5);

// Share of a feature's own weight inside [center - width/2, center + width/2].
double feature_fraction_in_window(const SpectralFeature& f, double center_mhz, double width_mhz);

}  // namespace hqnet
