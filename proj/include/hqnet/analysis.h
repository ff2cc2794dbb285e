#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hqnet/fitting.h"
#include "hqnet/histogram.h"
#include "hqnet/link.h"
#include "hqnet/simulate.h"
#include "hqnet/timetag.h"

namespace hqnet {

// Signal-minus-herald delays in [lo, hi) picoseconds, counted in one pass with
// sliding buffers. Throws unsorted_stream. Rates derived from the histogram use
// the stream's wall-clock duration.
Histogram coincidence_histogram(const TimeTagStream& stream, std::uint8_t herald_ch, std::uint8_t signal_ch,
                                double bin_ps, double lo_ps, double hi_ps,
                                const std::function<bool(std::uint64_t)>& accept_herald = {});

// Symmetric range [-range, range).
Histogram coincidence_histogram(const TimeTagStream& stream, std::uint8_t herald_ch, std::uint8_t signal_ch,
                                double bin_ps, double range_ps);

enum class FitKind { flat, piecewise_gated };
enum class PeakFamily { one_sided_exponential, two_sided_exponential, gaussian };

std::string to_string(FitKind kind);
std::string to_string(PeakFamily family);
PeakFamily peak_family_for(CorrelationShape shape);

// Unit-height peak averaged over [lo, hi), relative to the centre.
double bin_average_shape(PeakFamily family, double width, double lo, double hi);

struct CrossG2Options {
  std::optional<GatingConfig> gating;     // selects the piecewise gated background
  std::optional<double> storage_time_us;  // adds the echo-window term to the gated background
  std::optional<double> herald_window_start_us;  // herald acceptance inside each cycle;
  std::optional<double> herald_window_us;        // defaults to the whole herald gate
  bool fit_tau_d = true;                  // otherwise gating.tau_d_us is used as given
  PeakFamily family = PeakFamily::two_sided_exponential;
  std::optional<double> peak_delay_ps;  // centre of the peak search
  double search_half_width_ps = 0.0;    // 0 searches the whole histogram
  std::optional<double> peak_width_ps;  // initial width; default from the half maximum
};

struct CorrelationResult {
  double g2_max = 1.0;
  double g2_stderr = 0.0;
  double peak_delay_ps = 0.0;
  double peak_width_ps = 0.0;        // decay time or Gaussian sigma
  double amplitude_per_bin = 0.0;    // fitted peak height above background
  double background_per_bin = 0.0;   // at the peak centre
  double background_stderr = 0.0;
  double background_reduced_chi2 = 0.0;
  double tau_d_us = 0.0;             // fitted gate offset when gated
  FitKind fit_kind = FitKind::flat;
  PeakFamily peak_family = PeakFamily::two_sided_exponential;
  bool lower_bound = false;          // background consistent with zero; g2 is a lower bound
  double window_lo_ps = 0.0;         // peak window used for the net counts
  double window_hi_ps = 0.0;
  double net_counts = 0.0;
  double net_counts_stderr = 0.0;
};

// Background by Poisson-weighted least squares outside the peak window, then a
// bin-integrated peak fit. Throws insufficient_statistics when too few
// background bins remain.
CorrelationResult cross_g2(const Histogram& hist, const CrossG2Options& options = {});

// Bin-averaged background design of the gated model: overlap (us) of the
// herald window with the direct and echo signal windows at each bin.
std::vector<double> gated_overlap_column(const Histogram& hist, const GatingConfig& gating, double signal_offset_us,
                                         double herald_start_us, double herald_window_us);

struct AutoG2Result {
  double g2 = 0.0;
  double g2_stderr = 0.0;
  std::uint64_t heralds = 0;
  std::uint64_t triples = 0;        // N(0)
  double mean_offset_triples = 0.0; // mean of N(dn) over dn != 0
};

struct AutoG2Options {
  double window_ns = 0.2;
  int dn_max = 10;
  std::optional<double> window_start_ns;  // default -window/2, centred on zero delay
};

// Heralded g2(0) from per-herald windows on the two arms of a split signal.
// Throws insufficient_statistics when any dn != 0 bin is empty.
AutoG2Result heralded_auto_g2(const TimeTagStream& stream, std::uint8_t herald_ch, std::uint8_t arm_a,
                              std::uint8_t arm_b, const AutoG2Options& options = {});

// g2_hs^2 / (g2_hh * g2_ss); throws division_by_zero.
double cauchy_schwarz(double g2_hs, double g2_hh, double g2_ss);

double time_bandwidth_product(double storage_time_us, double echo_fwhm_ns);

// Quantities per wall-clock second. Background rates are per bin of the named width.
struct NoiseInputs {
  double echo_rate_cps = 0.0;
  double echo_background_cps = 0.0;
  double echo_bin_ps = 500.0;
  double source_rate_cps = 0.0;
  double source_background_cps = 0.0;
  double source_bin_ps = 50.0;
  std::optional<double> efficiency;  // overall efficiency; default echo / source rate
  double d_snspd_cps = 0.0;          // expected detector-only background per echo bin
};

struct NoiseBudget {
  double d_total = 0.0;  // echo background per bin
  double d_total_stderr = 0.0;
  double source_share = 0.0;  // efficiency times the source background, in echo bins
  double d_afc_plus_snspd = 0.0;
  double d_afc_plus_snspd_stderr = 0.0;
  double d_snspd = 0.0;
  double d_afc = 0.0;  // residual against the supplied detector background
  double overall_efficiency = 0.0;
  double overall_efficiency_stderr = 0.0;
};

// Background per bin implied by a peak rate, its g2 and the peak area in bins.
double background_from_peak(double rate_cps, double g2, double integral_bins);

// Throws model_inconsistent when the echo background is negative.
NoiseBudget solve_noise_budget(const NoiseInputs& in, double echo_background_stderr = 0.0,
                               double echo_rate_stderr = 0.0, double source_rate_stderr = 0.0);

// Budget from fitted source and echo histograms.
NoiseBudget noise_budget(const Histogram& source_hist, const CorrelationResult& source, const Histogram& echo_hist,
                         const CorrelationResult& echo, std::optional<double> efficiency, double d_snspd_cps);

struct ModeStat {
  int mode = 0;
  double rate_cps = 0.0;  // net heralded echo rate
  double rate_stderr = 0.0;
  CorrelationResult correlation;
};

struct MultimodeStats {
  std::vector<ModeStat> modes;
  std::vector<double> cumulative_rate_cps;  // over modes 0..N-1
  LineFit cumulative_fit;                    // cumulative rate against N
  LineFit g2_trend;                          // per-mode g2 against mode index, weighted
};

struct MultimodeOptions {
  std::uint8_t herald_ch = kHeraldChannel;
  std::uint8_t signal_ch = kSignalChannel;
  double bin_ps = 500.0;
  double half_range_ps = 150e3;  // histogram half-range around the echo delay
  double storage_time_us = 1.01;
  CrossG2Options fit;            // gating, family and width; the herald window is set per mode
  int jobs = 1;
};

MultimodeStats multimode_stats(const TimeTagStream& stream, const ModeSchedule& schedule,
                               const MultimodeOptions& options);

struct LossComponent {
  std::string name;
  double fraction = 1.0;
  bool internal = false;  // part of the memory's internal efficiency
};

struct LossBudget {
  double total = 1.0;
  double internal = 1.0;
  std::vector<double> partials;  // running product in input order
};

// Throws domain_error when a fraction lies outside (0, 1].
LossBudget loss_budget(const std::vector<LossComponent>& components);

// Gating duty, AOM, interconnect, collection, storage, polarisation and in-band factors.
std::vector<LossComponent> reference_loss_components();

}  // namespace hqnet
