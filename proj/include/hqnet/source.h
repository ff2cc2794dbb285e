#pragma once

#include <filesystem>
#include <vector>

namespace hqnet {

enum class CorrelationShape {
  symmetric,  // exp(-|tau - tau0| / tau_c)
  one_sided,  // exp(-(tau - tau0) / tau_c) for tau >= tau0, zero before
};

struct SourceConfig {
  double pair_rate_cps = 46e3;  // at the reference pump powers
  double herald_singles_cps = 423e3;
  double signal_singles_cps = 2333e3;
  double correlation_time_ns = 0.32;
  double g2_cross_max = 130.0;
  double delta1_mhz = -817.0;
  double delta2_mhz = 903.0;
  double power1_mw = 1.0;  // reference pump powers
  double power2_mw = 1.0;
  double spectral_slope = 0.5;  // output shift per unit of delta2, must lie in (0, 1)
  CorrelationShape shape = CorrelationShape::symmetric;

  friend bool operator==(const SourceConfig&, const SourceConfig&) = default;
};

// Throws Error(domain_error) naming the first violated invariant.
void validate(const SourceConfig& cfg);

double scaled_pair_rate(const SourceConfig& cfg, double p1_mw, double p2_mw);

// Shift of the emitted spectrum relative to its centre at cfg.delta2_mhz.
double feature_center(const SourceConfig& cfg, double delta2_mhz);

double cross_correlation_profile(const SourceConfig& cfg, double tau_ns, double tau0_ns = 0.0);

// Peak value (per ns) of the normalised herald-to-signal delay density.
double delay_density_peak_per_ns(CorrelationShape shape, double correlation_time_ns);

double mean_pair_number(double herald_cps, double signal_cps, double coincidence_cps,
                        double correlation_time_ns);

struct OperatingPoint {
  double delta2_mhz = 0.0;
  double pair_rate_cps = 0.0;
  double g2_max = 1.0;

  friend bool operator==(const OperatingPoint&, const OperatingPoint&) = default;
};

// CSV with header delta2_MHz,pair_rate_cps,g2_max; rows sorted by delta2 on load.
std::vector<OperatingPoint> load_operating_table(const std::filesystem::path& path);

// Linear interpolation; throws Error(domain_error) outside the tabulated range.
OperatingPoint interpolate(const std::vector<OperatingPoint>& table, double delta2_mhz);

}  // namespace hqnet
