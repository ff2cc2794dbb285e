#include "hqnet/spectral.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "hqnet/constants.h"
#include "hqnet/error.h"

namespace hqnet {

namespace {

constexpr double kSpanFwhms = 8.0;
constexpr double kGridFraction = 20.0;

double narrowest_fwhm(const SpectralProfile& profile) {
  double narrowest = std::numeric_limits<double>::infinity();
  for (const auto& f : profile.features) narrowest = std::min(narrowest, f.fwhm_mhz);
  return narrowest;
}

double trapezoid(const std::vector<double>& y, double step) {
  if (y.size() < 2) return 0.0;
  double sum = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) sum += y[i];
  return sum * step;
}

}  // namespace

double SpectralProfile::total_weight() const {
  double total = 0.0;
  for (const auto& f : features) total += f.weight;
  return total;
}

void validate(const SpectralFeature& feature) {
  if (!(feature.fwhm_mhz > 0.0)) throw Error(ErrorCode::domain_error, "spectral feature fwhm must be > 0");
  if (!(feature.weight >= 0.0)) throw Error(ErrorCode::domain_error, "spectral feature weight must be >= 0");
}

void validate(const SpectralProfile& profile) {
  for (const auto& f : profile.features) validate(f);
  if (profile.total_weight() > 1.0 + 1e-9)
    throw Error(ErrorCode::domain_error, "spectral weights sum to more than 1");
}

double unit_shape(LineShape shape, double offset, double fwhm) {
  using constants::pi;
  if (shape == LineShape::gaussian) {
    const double sigma = fwhm / constants::fwhm_per_sigma;
    return std::exp(-0.5 * offset * offset / (sigma * sigma)) / (sigma * std::sqrt(2.0 * pi));
  }
  const double hwhm = 0.5 * fwhm;
  return hwhm / (pi * (offset * offset + hwhm * hwhm));
}

double peak_shape(LineShape shape, double offset, double fwhm) {
  if (shape == LineShape::gaussian) {
    const double sigma = fwhm / constants::fwhm_per_sigma;
    return std::exp(-0.5 * offset * offset / (sigma * sigma));
  }
  const double hwhm = 0.5 * fwhm;
  return hwhm * hwhm / (offset * offset + hwhm * hwhm);
}

double density(const SpectralProfile& profile, double nu) {
  double d = 0.0;
  for (const auto& f : profile.features) d += f.weight * unit_shape(f.shape, nu - f.center_mhz, f.fwhm_mhz);
  return d;
}

double AbsorptionProfile::depth(double nu) const {
  double d = 0.0;
  for (const auto& f : profile.features) d += f.weight * peak_shape(f.shape, nu - f.center_mhz, f.fwhm_mhz);
  return peak_optical_depth * d;
}

double AbsorptionProfile::transmission(double nu) const { return std::exp(-depth(nu)); }

void SampledSpectrum::write_csv(std::ostream& out) const {
  out << "nu_MHz,density_per_MHz\n";
  out.precision(12);
  for (std::size_t i = 0; i < density.size(); ++i) out << nu_at(i) << ',' << density[i] << '\n';
}

SampledSpectrum notch_filter(const SpectralProfile& photon, const AbsorptionProfile& absorber,
                             double step) {
  validate(photon);
  validate(absorber.profile);
  if (absorber.peak_optical_depth < 0.0)
    throw Error(ErrorCode::domain_error, "absorber optical depth must be >= 0");
  const double limit = std::min(narrowest_fwhm(photon), narrowest_fwhm(absorber.profile)) / kGridFraction;
  if (!(step > 0.0) || step > limit)
    throw Error(ErrorCode::grid_too_coarse, "grid step exceeds 1/20 of the narrowest feature fwhm");

  SampledSpectrum out;
  out.step_mhz = step;
  if (photon.features.empty()) return out;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& f : photon.features) {
    lo = std::min(lo, f.center_mhz - kSpanFwhms * f.fwhm_mhz);
    hi = std::max(hi, f.center_mhz + kSpanFwhms * f.fwhm_mhz);
  }
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  out.start_mhz = lo;
  out.density.resize(n);
  std::vector<double> input(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double nu = out.nu_at(i);
    input[i] = density(photon, nu);
    out.density[i] = input[i] * absorber.transmission(nu);
  }
  out.input_weight = trapezoid(input, step);
  out.output_weight = trapezoid(out.density, step);
  out.transmitted_fraction = out.input_weight > 0.0 ? out.output_weight / out.input_weight : 1.0;
  return out;
}

SampledSpectrum notch_filter(const SpectralProfile& photon, const AbsorptionProfile& absorber) {
  const double narrowest = std::min(narrowest_fwhm(photon), narrowest_fwhm(absorber.profile));
  const double step = std::isfinite(narrowest) ? narrowest / kGridFraction : 1.0;
  return notch_filter(photon, absorber, step);
}

double absorbed_fraction(const SpectralProfile& photon, double center, double width) {
  if (!(width > 0.0)) throw Error(ErrorCode::domain_error, "window width must be > 0");
  validate(photon);
  if (photon.features.empty()) return 0.0;
  // Fixed step anchored at the window centre keeps the result monotone in width.
  const double step = narrowest_fwhm(photon) / 400.0;
  const double half = 0.5 * width;
  const auto whole = static_cast<std::size_t>(std::floor(half / step));
  double sum = 0.0;
  for (int side : {-1, 1}) {
    double prev = density(photon, center);
    for (std::size_t k = 1; k <= whole; ++k) {
      const double cur = density(photon, center + side * step * static_cast<double>(k));
      sum += 0.5 * (prev + cur) * step;
      prev = cur;
    }
    const double rest = half - step * static_cast<double>(whole);
    if (rest > 0.0) sum += 0.5 * (prev + density(photon, center + side * half)) * rest;
  }
  return std::clamp(sum, 0.0, photon.total_weight());
}

}  // namespace hqnet
