#include "hqnet/superhyperfine.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "hqnet/constants.h"
#include "hqnet/error.h"

namespace hqnet {

namespace {

using Eigen::Vector3d;
using Matrix = Eigen::MatrixXcd;

Vector3d to_eigen(const Vec3& v) { return {v[0], v[1], v[2]}; }
Vec3 from_eigen(const Vector3d& v) { return {v.x(), v.y(), v.z()}; }

struct SpinMatrices {
  Matrix x, y, z;
};

// Basis ordered m = I, I-1, ..., -I.
SpinMatrices spin_matrices(int twice_spin) {
  const int dim = twice_spin + 1;
  const double spin = 0.5 * twice_spin;
  SpinMatrices s{Matrix::Zero(dim, dim), Matrix::Zero(dim, dim), Matrix::Zero(dim, dim)};
  for (int k = 0; k < dim; ++k) {
    const double m = spin - k;
    s.z(k, k) = m;
    if (k + 1 < dim) {
      // <m| I+ |m-1> = sqrt(I(I+1) - m(m-1))
      const double raise = std::sqrt(spin * (spin + 1.0) - m * (m - 1.0));
      s.x(k, k + 1) = 0.5 * raise;
      s.x(k + 1, k) = 0.5 * raise;
      s.y(k, k + 1) = std::complex<double>(0.0, -0.5 * raise);
      s.y(k + 1, k) = std::complex<double>(0.0, 0.5 * raise);
    }
  }
  return s;
}

void check_site(const NuclearSpinSite& site) {
  if (site.twice_spin < 1) throw Error(ErrorCode::domain_error, "nuclear spin must be >= 1/2");
  if (to_eigen(site.c_axis).norm() == 0.0) throw Error(ErrorCode::domain_error, "site c axis is zero");
}

}  // namespace

std::vector<NuclearSpinSite> vanadium_neighbours() {
  constexpr double a = 7.12;
  constexpr double c = 6.29;
  std::vector<NuclearSpinSite> sites;
  for (double z : {3.1, -3.1}) sites.push_back({{0.0, 0.0, z}, 7, 1.6, 171.0, {0.0, 0.0, 1.0}});
  const Vec3 next[] = {{a / 2, 0.0, -c / 4}, {-a / 2, 0.0, -c / 4}, {0.0, a / 2, c / 4}, {0.0, -a / 2, c / 4}};
  for (const auto& p : next) sites.push_back({p, 7, 1.6, 165.0, {0.0, 0.0, 1.0}});
  return sites;
}

Vec3 dipolar_field(const NuclearSpinSite& site, double g_er, const Vec3& b_applied) {
  const Vector3d r = to_eigen(site.position_angstrom) * 1e-10;
  const double dist = r.norm();
  if (dist == 0.0) throw Error(ErrorCode::zero_distance, "nuclear site coincides with the Er ion");
  const Vector3d applied = to_eigen(b_applied);
  const Vector3d axis = applied.norm() > 0.0 ? Vector3d(-applied.normalized()) : Vector3d(0.0, 0.0, -1.0);
  const Vector3d moment = axis * (0.5 * g_er * constants::bohr_magneton_j_per_t);
  const Vector3d n = r / dist;
  const Vector3d dip = constants::mu0_over_4pi * (3.0 * moment.dot(n) * n - moment) / (dist * dist * dist);
  return from_eigen(applied + dip);
}

SpinLevelSet spin_levels(const NuclearSpinSite& site, const Vec3& field, ElectronicState state) {
  check_site(site);
  const auto s = spin_matrices(site.twice_spin);
  const Vector3d b = to_eigen(field);
  const Vector3d c = to_eigen(site.c_axis).normalized();
  const double zeeman = site.g_nuclear * constants::nuclear_magneton_mhz_per_t;
  const Matrix ic = c.x() * s.x + c.y() * s.y + c.z() * s.z;
  const Matrix h = zeeman * (b.x() * s.x + b.y() * s.y + b.z() * s.z) + (1e-3 * site.quadrupole_khz) * ic * ic;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::eigen_failure, "spin Hamiltonian diagonalisation failed");

  SpinLevelSet out;
  out.site = site;
  out.state = state;
  const auto& ev = solver.eigenvalues();
  out.energies_mhz.assign(ev.data(), ev.data() + ev.size());
  const double mean = std::accumulate(out.energies_mhz.begin(), out.energies_mhz.end(), 0.0) /
                      static_cast<double>(out.energies_mhz.size());
  for (auto& e : out.energies_mhz) e -= mean;
  std::sort(out.energies_mhz.begin(), out.energies_mhz.end());
  return out;
}

double central_spacing_mhz(const SpinLevelSet& levels) {
  const auto& e = levels.energies_mhz;
  if (e.size() < 2) throw Error(ErrorCode::domain_error, "need at least two levels");
  const std::size_t hi = e.size() / 2;
  return e[hi] - e[hi - 1];
}

double transition_spacing_khz(const NuclearSpinSite& site, double g_ground, double g_excited, double b) {
  const Vec3 applied{0.0, 0.0, b};
  const auto ground = spin_levels(site, dipolar_field(site, g_ground, applied), ElectronicState::ground);
  const auto excited = spin_levels(site, dipolar_field(site, g_excited, applied), ElectronicState::excited);
  return 1e3 * std::abs(central_spacing_mhz(ground) - central_spacing_mhz(excited));
}

Histogram band_spectrum(const std::vector<NuclearSpinSite>& sites, double g_er, double b, double bin) {
  if (!(bin > 0.0)) throw Error(ErrorCode::domain_error, "bin width must be > 0");
  if (sites.empty()) throw Error(ErrorCode::domain_error, "band spectrum needs at least one site");
  std::uint64_t combos = 1;
  for (const auto& s : sites) {
    combos *= static_cast<std::uint64_t>(s.twice_spin + 1);
    if (combos > kMaxBandCombinations)
      throw Error(ErrorCode::combinatorial_overflow, "level combinations exceed 1e7");
  }

  const Vec3 applied{0.0, 0.0, b};
  std::vector<std::vector<double>> levels;
  for (const auto& s : sites) levels.push_back(spin_levels(s, dipolar_field(s, g_er, applied)).energies_mhz);

  // Sums accumulate left to right over sites; every caller sees the same rounding.
  double lo = 0.0, hi = 0.0;
  for (const auto& l : levels) {
    lo += l.front();
    hi += l.back();
  }
  Histogram h;
  h.axis = Axis::frequency;
  h.start = lo;
  h.bin_width = bin;
  h.counts.assign(static_cast<std::size_t>(std::floor((hi - lo) / bin)) + 1, 0);
  h.end = lo + bin * static_cast<double>(h.counts.size());
  h.provenance = "band_spectrum";

  const std::size_t n = levels.size();
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + levels[k][0];
  while (true) {
    const double sum = prefix[n];
    const auto bin_index = static_cast<std::size_t>(std::floor((sum - lo) / bin));
    ++h.counts[std::min(bin_index, h.counts.size() - 1)];
    // Odometer with the last site fastest; refresh the prefix sums to the right.
    std::size_t k = n;
    while (k > 0) {
      --k;
      if (++idx[k] < levels[k].size()) break;
      idx[k] = 0;
      if (k == 0) return h;
    }
    for (std::size_t j = k; j < n; ++j) prefix[j + 1] = prefix[j] + levels[j][idx[j]];
  }
}

AntiholeOffsets antihole_offsets(double spacing, double rabi, double hole_width) {
  if (!(spacing > 0.0) || !(rabi > 0.0)) throw Error(ErrorCode::domain_error, "spacing and rabi must be > 0");
  auto k = static_cast<long long>(std::floor(rabi / spacing)) + 1;
  while (k > 1 && static_cast<double>(k - 1) * spacing > rabi) --k;
  while (static_cast<double>(k) * spacing <= rabi) ++k;
  AntiholeOffsets out;
  out.order = static_cast<int>(k);
  const double offset = static_cast<double>(k) * spacing;
  out.offsets_khz = {-offset, offset};
  out.resolvable = spacing >= hole_width;
  return out;
}

}  // namespace hqnet
