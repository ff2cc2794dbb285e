#pragma once

#include <iosfwd>
#include <vector>

namespace hqnet {

enum class LineShape { gaussian, lorentzian };

// Frequencies are in MHz relative to SpectralProfile::reference_frequency_ghz.
struct SpectralFeature {
  double center_mhz = 0.0;
  double fwhm_mhz = 1.0;
  double weight = 0.0;  // fraction of total emission
  LineShape shape = LineShape::gaussian;

  friend bool operator==(const SpectralFeature&, const SpectralFeature&) = default;
};

struct SpectralProfile {
  std::vector<SpectralFeature> features;
  double reference_frequency_ghz = 0.0;  // documentation only

  double total_weight() const;

  friend bool operator==(const SpectralProfile&, const SpectralProfile&) = default;
};

// depth(nu) = peak_optical_depth * sum_i weight_i * s_i(nu), with s_i scaled to a
// unit peak. A single unit-weight feature therefore reaches peak_optical_depth.
struct AbsorptionProfile {
  SpectralProfile profile;
  double peak_optical_depth = 0.0;

  double depth(double nu_mhz) const;
  double transmission(double nu_mhz) const;

  friend bool operator==(const AbsorptionProfile&, const AbsorptionProfile&) = default;
};

// Throws Error(domain_error) on fwhm <= 0, weight < 0 or total weight > 1.
void validate(const SpectralFeature& feature);
void validate(const SpectralProfile& profile);

// Unit-area line shape centred on zero.
double unit_shape(LineShape shape, double offset_mhz, double fwhm_mhz);
// Same shape scaled to unit peak height.
double peak_shape(LineShape shape, double offset_mhz, double fwhm_mhz);

double density(const SpectralProfile& profile, double nu_mhz);

struct SampledSpectrum {
  double start_mhz = 0.0;
  double step_mhz = 0.0;
  std::vector<double> density;  // per MHz
  double input_weight = 0.0;    // trapezoid integral of the unfiltered density
  double output_weight = 0.0;   // trapezoid integral of the filtered density
  double transmitted_fraction = 1.0;

  double nu_at(std::size_t i) const { return start_mhz + step_mhz * static_cast<double>(i); }
  void write_csv(std::ostream& out) const;
};

// Grid spans the union of photon features +-8 fwhm. Throws GridTooCoarse when
// grid_step exceeds 1/20 of the narrowest photon or absorber fwhm.
SampledSpectrum notch_filter(const SpectralProfile& photon, const AbsorptionProfile& absorber,
                             double grid_step_mhz);
// Uses the coarsest admissible grid step.
SampledSpectrum notch_filter(const SpectralProfile& photon, const AbsorptionProfile& absorber);

// Emission weight inside [center - width/2, center + width/2], trapezoidal.
double absorbed_fraction(const SpectralProfile& photon, double window_center_mhz,
                         double window_width_mhz);

}  // namespace hqnet
