#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hqnet/constants.h"
#include "hqnet/error.h"
#include "hqnet/scenario.h"
#include "hqnet/spectral.h"

using namespace hqnet;

namespace {

SpectralProfile single(double center, double fwhm, double weight, LineShape shape) {
  SpectralProfile p;
  p.features = {{center, fwhm, weight, shape}};
  return p;
}

AbsorptionProfile er_line(double center, double depth) {
  AbsorptionProfile a;
  a.profile = single(center, 131.0, 1.0, LineShape::lorentzian);
  a.peak_optical_depth = depth;
  return a;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("density of closed-form line shapes") {
    CHECK(density(SpectralProfile{}, 12.0) == 0.0);
    const double gauss = 2.0 * std::sqrt(std::log(2.0) / constants::pi) / 100.0;
    CHECK(density(single(0, 100, 1, LineShape::gaussian), 0.0) == doctest::Approx(gauss).epsilon(1e-12));
    CHECK(gauss == doctest::Approx(0.009394).epsilon(1e-4));
    CHECK(density(single(0, 131, 1, LineShape::lorentzian), 0.0) ==
          doctest::Approx(2.0 / (constants::pi * 131.0)).epsilon(1e-12));
  }

  TEST_CASE("validation rejects bad features") {
    CHECK_THROWS_AS(validate(single(0, 0, 0.5, LineShape::gaussian)), Error);
    CHECK_THROWS_AS(validate(single(0, 10, -0.1, LineShape::gaussian)), Error);
    SpectralProfile heavy = single(0, 10, 0.7, LineShape::gaussian);
    heavy.features.push_back({5, 10, 0.7, LineShape::gaussian});
    CHECK_THROWS_AS(validate(heavy), Error);
  }

  TEST_CASE("zero-depth absorber is the identity") {
    const auto photon = default_source_spectrum();
    const auto out = notch_filter(photon, er_line(0.0, 0.0));
    CHECK(out.transmitted_fraction == doctest::Approx(1.0).epsilon(1e-12));
    double worst = 0.0;
    for (std::size_t i = 0; i < out.density.size(); ++i)
      worst = std::max(worst, std::abs(out.density[i] - density(photon, out.nu_at(i))));
    CHECK(worst < 1e-12);
  }

  TEST_CASE("the Er line removes the target feature") {
    const auto photon = single(0, 100, 0.22, LineShape::gaussian);
    CHECK(notch_filter(photon, er_line(0.0, 4.5)).transmitted_fraction < 0.05);
    // Lorentzian wings leave depth 4.5 / 401 at ten linewidths.
    const double wing = notch_filter(photon, er_line(1310.0, 4.5)).transmitted_fraction;
    CHECK(wing == doctest::Approx(std::exp(-4.5 / 401.0)).epsilon(2e-4));
    CHECK(notch_filter(photon, er_line(11.0 * 131.0, 4.5)).transmitted_fraction >= 0.99);
  }

  TEST_CASE("transmission falls with depth") {
    const auto photon = default_source_spectrum();
    double last = 1.0;
    for (double d : {0.0, 0.5, 1.0, 2.0, 4.5, 9.0}) {
      const double t = notch_filter(photon, er_line(0.0, d)).transmitted_fraction;
      CHECK(t <= last + 1e-12);
      last = t;
    }
  }

  TEST_CASE("coarse grid is rejected") {
    CHECK_THROWS_AS(notch_filter(single(0, 10, 1, LineShape::gaussian), er_line(0, 1), 1.0), Error);
    try {
      notch_filter(single(0, 10, 1, LineShape::gaussian), er_line(0, 1), 1.0);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::grid_too_coarse);
    }
  }

  TEST_CASE("absorbed fraction") {
    const auto photon = default_source_spectrum();
    const double main = absorbed_fraction(photon, 0.0, 100.0);
    CHECK(main >= 0.20);
    CHECK(main <= 0.25);
    CHECK(absorbed_fraction(photon, 0.0, 1e5) == doctest::Approx(photon.total_weight()).epsilon(1e-6));
    CHECK(absorbed_fraction(single(0, 50, 0.0, LineShape::gaussian), 0.0, 100.0) == 0.0);
    double last = 0.0;
    for (double w : {1.0, 10.0, 50.0, 100.0, 300.0, 1000.0}) {
      const double f = absorbed_fraction(photon, 0.0, w);
      CHECK(f >= last);
      CHECK(f <= photon.total_weight() + 1e-12);
      last = f;
    }
  }

  TEST_CASE("sampled spectrum csv") {
    std::ostringstream out;
    notch_filter(single(0, 100, 1, LineShape::gaussian), er_line(0, 1)).write_csv(out);
    CHECK(out.str().rfind("nu_MHz,density_per_MHz\n", 0) == 0);
  }
}
