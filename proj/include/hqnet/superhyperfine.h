#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hqnet/histogram.h"

namespace hqnet {

using Vec3 = std::array<double, 3>;

struct NuclearSpinSite {
  Vec3 position_angstrom{0.0, 0.0, 1.0};  // relative to the Er ion
  int twice_spin = 7;                       // 2I
  double g_nuclear = 1.6;
  double quadrupole_khz = 171.0;
  Vec3 c_axis{0.0, 0.0, 1.0};  // quadrupole axis; rotates with the site
};

enum class ElectronicState { ground, excited };

struct SpinLevelSet {
  std::vector<double> energies_mhz;  // ascending, relative to their mean
  NuclearSpinSite site;
  ElectronicState state = ElectronicState::ground;
};

// Two nearest V along the c axis at 3.1 Angstrom and four next-nearest at
// (+-a/2, 0, -c/4), (0, +-a/2, +c/4) with a = 7.12, c = 6.29 Angstrom.
std::vector<NuclearSpinSite> vanadium_neighbours();

// Applied field plus the point-dipole field of the Er moment g*muB/2, taken
// antiparallel to the applied field (along -z when the applied field is zero).
// Tesla in and out; throws zero_distance for a site at the origin.
Vec3 dipolar_field(const NuclearSpinSite& site, double g_er, const Vec3& b_applied);

// Nuclear Zeeman plus quadrupole levels. Throws eigen_failure if the solver fails.
SpinLevelSet spin_levels(const NuclearSpinSite& site, const Vec3& total_field_t,
                         ElectronicState state = ElectronicState::ground);

// Gap between the two central levels (m = -1/2 and +1/2 for half-integer spin), MHz.
double central_spacing_mhz(const SpinLevelSet& levels);

// |ground central spacing - excited central spacing| with the field along c, kHz.
double transition_spacing_khz(const NuclearSpinSite& site, double g_ground, double g_excited,
                              double b_applied_t);

// Histogram of every sum of one level per site; field along c. Throws
// combinatorial_overflow when the product of level counts exceeds 1e7.
Histogram band_spectrum(const std::vector<NuclearSpinSite>& sites, double g_er, double b_applied_t,
                        double bin_mhz = 1.0);

struct AntiholeOffsets {
  std::vector<double> offsets_khz;  // -k*spacing, +k*spacing
  int order = 0;                    // k
  bool resolvable = true;           // spacing at least the hole width
};

// Smallest k with k*spacing > rabi.
AntiholeOffsets antihole_offsets(double spacing_khz, double rabi_khz, double hole_width_khz = 129.0);

inline constexpr std::uint64_t kMaxBandCombinations = 10'000'000;

}  // namespace hqnet
