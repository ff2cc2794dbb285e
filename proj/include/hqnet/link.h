#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hqnet {

struct FiberConfig {
  double length_km = 0.0;
  double attenuation_db_per_km = 0.32;
  double excess_loss_db = 0.0;
  double group_index = 1.468;

  friend bool operator==(const FiberConfig&, const FiberConfig&) = default;
};

void validate(const FiberConfig& fiber);

double fiber_transmission(const FiberConfig& fiber);
double fiber_delay_us(const FiberConfig& fiber);

// Single config equivalent to traversing a then b.
FiberConfig concatenate(const FiberConfig& a, const FiberConfig& b);

// Herald gate open on [k*cycle, k*cycle + t_on); signal gate open on the same
// window shifted by tau_d.
struct GatingConfig {
  double t_on_us = 0.8;
  double t_off_us = 1.2;
  double tau_d_us = 0.0;
  double background_rate = 1.0;  // accidental coincidences per bin per unit overlap

  double cycle_us() const { return t_on_us + t_off_us; }

  friend bool operator==(const GatingConfig&, const GatingConfig&) = default;
};

void validate(const GatingConfig& g);

struct GatingReport {
  bool ok = true;
  std::vector<std::string> violations;

  std::string message() const;
};

GatingReport validate_gating(const GatingConfig& g, double tau_afc_us);

// Length of the overlap between [a0, a1) and [b0, b1) when both repeat with
// `period`; each window must be no longer than the period.
double cyclic_overlap(double a0, double a1, double b0, double b1, double period);

// Accidental background at delay tau for the gated herald and signal windows.
double background_profile(const GatingConfig& g, double tau_us);

void write_background_csv(std::ostream& out, const GatingConfig& g, double tau_start_us,
                          double tau_end_us, double step_us);

}  // namespace hqnet
