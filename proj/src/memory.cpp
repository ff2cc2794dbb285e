#include "hqnet/memory.h"

#include <algorithm>
#include <cmath>

#include "hqnet/constants.h"
#include "hqnet/error.h"

namespace hqnet {

namespace {

// Dephasing constant of Gaussian teeth: pi^2 / (2 ln 2).
const double kDephasing = constants::pi * constants::pi / (2.0 * constants::ln2);

}  // namespace

void validate(const AfcConfig& afc) {
  auto fail = [](const char* what) { throw Error(ErrorCode::config_invalid, what); };
  if (!(afc.comb_spacing_mhz > 0.0)) fail("memory.comb_spacing_MHz must be > 0");
  if (!(afc.comb_bandwidth_mhz >= afc.comb_spacing_mhz))
    fail("memory.comb_bandwidth_MHz must be >= memory.comb_spacing_MHz");
  if (!(afc.tooth_optical_depth >= 0.0)) fail("memory.tooth_optical_depth must be >= 0");
  if (!(afc.background_depth >= 0.0)) fail("memory.background_depth must be >= 0");
  if (!(afc.finesse >= 1.0)) fail("memory.finesse must be >= 1");
  if (!(afc.echo_width_constant > 0.0)) fail("memory.echo_width_constant must be > 0");
}

void validate(const ErTransitionConfig& er) {
  if (!(er.inhomogeneous_fwhm_mhz > 0.0))
    throw Error(ErrorCode::config_invalid, "transition.inhomogeneous_fwhm_MHz must be > 0");
  if (!(er.temperature_k > 0.0)) throw Error(ErrorCode::config_invalid, "transition.temperature_K must be > 0");
}

double zeeman_shift(const ErTransitionConfig& er, double b) {
  if (b < 0.0) throw Error(ErrorCode::domain_error, "field must be >= 0");
  return -0.5 * (er.g_excited - er.g_ground) * constants::bohr_magneton_ghz_per_t * b;
}

double electron_polarization(const ErTransitionConfig& er, double b) {
  if (b < 0.0) throw Error(ErrorCode::domain_error, "field must be >= 0");
  if (!(er.temperature_k > 0.0)) throw Error(ErrorCode::domain_error, "temperature must be > 0");
  const double split_ghz = er.electron_splitting_ghz_per_t * b;
  const double x = constants::planck_over_boltzmann_k_per_ghz * split_ghz / er.temperature_k;
  return 1.0 / (1.0 + std::exp(-x));
}

double afc_efficiency(double d, double f, double d0) {
  if (!(f >= 1.0)) throw Error(ErrorCode::domain_error, "finesse must be >= 1");
  if (d < 0.0 || d0 < 0.0) throw Error(ErrorCode::domain_error, "optical depths must be >= 0");
  const double x = d / f;
  return x * x * std::exp(-x) * std::exp(-kDephasing / (f * f)) * std::exp(-d0);
}

FinesseOptimum optimal_finesse(double d, double d0) {
  if (!(d > 0.0)) throw Error(ErrorCode::domain_error, "tooth optical depth must be > 0");
  // d(ln eta)/dx = 2/x - d - 2 c x = 0 with x = 1/F.
  const double c = kDephasing;
  const double x = (-d + std::sqrt(d * d + 16.0 * c)) / (4.0 * c);
  FinesseOptimum opt;
  opt.finesse = std::max(1.0, 1.0 / x);
  opt.efficiency = afc_efficiency(d, opt.finesse, d0);
  return opt;
}

EchoParameters echo_parameters(const AfcConfig& afc) {
  validate(afc);
  return {1.0 / afc.comb_spacing_mhz, 1e3 * afc.echo_width_constant / afc.comb_bandwidth_mhz};
}

double comb_leakage(const AfcConfig& afc) {
  return std::exp(-afc.tooth_optical_depth / afc.finesse - afc.background_depth);
}

HoleDecayModel measured_hole_decay() {
  HoleDecayModel m;
  m.amplitude_fast = 0.3;
  m.amplitude_middle = 0.145 * 0.6;
  m.amplitude_slow = 0.855 * 0.6;
  m.amplitude_const = 0.1;
  m.tau_fast_ms = 3.42;
  m.tau_middle_s = 57.15;
  m.tau_slow_min = 107.45;
  return m;
}

double hole_depth(const HoleDecayModel& m, double t) {
  if (t < 0.0) throw Error(ErrorCode::domain_error, "wait time must be >= 0");
  return m.amplitude_fast * std::exp(-t / (1e-3 * m.tau_fast_ms)) +
         m.amplitude_middle * std::exp(-t / m.tau_middle_s) +
         m.amplitude_slow * std::exp(-t / (60.0 * m.tau_slow_min)) + m.amplitude_const;
}

StorageOutcome storage_outcome(double in_band, double pol, double eta, double leak) {
  auto unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!unit(in_band) || !unit(pol) || !unit(eta) || !unit(leak))
    throw Error(ErrorCode::domain_error, "storage probabilities must lie in [0, 1]");
  StorageOutcome out;
  out.echo = in_band * pol * eta;
  out.transmit = (1.0 - in_band) + in_band * (1.0 - pol) + in_band * pol * leak;
  const double used = out.echo + out.transmit;
  if (used > 1.0 + 1e-12) throw Error(ErrorCode::probability_overflow, "echo and transmission exceed unity");
  out.loss = std::max(0.0, 1.0 - used);
  return out;
}

double feature_fraction_in_window(const SpectralFeature& f, double center, double width) {
  const double lo = center - 0.5 * width - f.center_mhz;
  const double hi = center + 0.5 * width - f.center_mhz;
  if (f.shape == LineShape::gaussian) {
    const double s = f.fwhm_mhz / constants::fwhm_per_sigma * std::sqrt(2.0);
    return 0.5 * (std::erf(hi / s) - std::erf(lo / s));
  }
  const double g = 0.5 * f.fwhm_mhz;
  return (std::atan(hi / g) - std::atan(lo / g)) / constants::pi;
}

StorageOutcome storage_outcome(const SpectralFeature& photon, const AfcConfig& afc, double eta,
                               double pol) {
  validate(photon);
  const double in_band = feature_fraction_in_window(photon, afc.comb_center_mhz, afc.comb_bandwidth_mhz);
  return storage_outcome(in_band, pol, eta, comb_leakage(afc));
}

}  // namespace hqnet
