#pragma once

#include <numbers>

namespace hqnet::constants {

inline constexpr double bohr_magneton_ghz_per_t = 13.996;
inline constexpr double nuclear_magneton_mhz_per_t = 7.6226;
inline constexpr double bohr_magneton_j_per_t = 9.2740100783e-24;
inline constexpr double mu0_over_4pi = 1e-7;  // T m / A
inline constexpr double planck_over_boltzmann_k_per_ghz = 0.04799243;
inline constexpr double fwhm_per_sigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)
inline constexpr double pi = std::numbers::pi;
inline constexpr double ln2 = std::numbers::ln2;

}  // namespace hqnet::constants
