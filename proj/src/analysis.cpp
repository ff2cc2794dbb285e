#include "hqnet/analysis.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "hqnet/constants.h"
#include "hqnet/error.h"
#include "hqnet/parallel.h"

namespace hqnet {

namespace {

struct LabelledTime {
  std::uint64_t ts;
  int label;
};

// One pass over the stream; each herald carries a label selecting its histogram
// (negative labels are dropped). Pairs are counted when the later event arrives.
std::vector<Histogram> accumulate(const TimeTagStream& stream, std::uint8_t herald_ch, std::uint8_t signal_ch,
                                  double bin_ps, double lo_ps, double hi_ps, int labels,
                                  const std::function<int(std::uint64_t)>& label_of) {
  if (herald_ch == signal_ch) throw Error(ErrorCode::domain_error, "herald and signal channels must differ");
  if (!(bin_ps > 0.0) || !(hi_ps > lo_ps)) throw Error(ErrorCode::domain_error, "need bin > 0 and hi > lo");
  std::vector<Histogram> out(static_cast<std::size_t>(labels), Histogram::with_range(lo_ps, hi_ps, bin_ps, Axis::delay));
  for (auto& h : out) {
    h.live_time_s = stream.metadata.live_time_s;
    h.acquisition_s = stream.metadata.duration_s;
    h.provenance = stream.metadata.scenario_hash;
  }
  std::deque<LabelledTime> heralds;
  std::deque<std::uint64_t> signals;
  const auto add = [&](int label, double delay) {
    if (delay < lo_ps || delay >= hi_ps) return;
    auto& h = out[static_cast<std::size_t>(label)];
    const auto idx = static_cast<std::size_t>(std::floor((delay - lo_ps) / bin_ps));
    if (idx < h.counts.size()) ++h.counts[idx];
  };

  std::uint64_t previous = 0;
  for (const auto& ev : stream.events) {
    if (ev.timestamp_ps < previous) throw Error(ErrorCode::unsorted_stream, "timestamps decrease");
    previous = ev.timestamp_ps;
    if (ev.channel != herald_ch && ev.channel != signal_ch) continue;
    const double t = static_cast<double>(ev.timestamp_ps);
    // Heralds at or before t - hi and signals before t + lo can no longer pair.
    while (!heralds.empty() && static_cast<double>(heralds.front().ts) <= t - hi_ps) heralds.pop_front();
    while (!signals.empty() && static_cast<double>(signals.front()) < t + lo_ps) signals.pop_front();

    if (ev.channel == herald_ch) {
      const int label = label_of ? label_of(ev.timestamp_ps) : 0;
      if (label < 0 || label >= labels) continue;
      for (const auto s : signals) {
        const double delay = static_cast<double>(s) - t;
        if (delay >= hi_ps) break;
        add(label, delay);
      }
      heralds.push_back({ev.timestamp_ps, label});
    } else {
      for (const auto& h : heralds) {
        const double delay = t - static_cast<double>(h.ts);
        if (delay < lo_ps) break;
        add(h.label, delay);
      }
      signals.push_back(ev.timestamp_ps);
    }
  }
  return out;
}

// Antiderivative of the unit-height peak shape.
double shape_primitive(PeakFamily family, double w, double u) {
  switch (family) {
    case PeakFamily::one_sided_exponential:
      return u < 0.0 ? 0.0 : w * (-std::expm1(-u / w));
    case PeakFamily::two_sided_exponential:
      return u < 0.0 ? w * std::exp(u / w) : 2.0 * w - w * std::exp(-u / w);
    case PeakFamily::gaussian:
      return w * std::sqrt(constants::pi / 2.0) * std::erf(u / (w * std::sqrt(2.0)));
  }
  return 0.0;
}

double width_from_fwhm(PeakFamily family, double fwhm) {
  switch (family) {
    case PeakFamily::one_sided_exponential:
      return fwhm / constants::ln2;
    case PeakFamily::two_sided_exponential:
      return fwhm / (2.0 * constants::ln2);
    case PeakFamily::gaussian:
      return fwhm / constants::fwhm_per_sigma;
  }
  return fwhm;
}

double exclusion_half_width(PeakFamily family, double width) {
  return family == PeakFamily::gaussian ? 6.0 * width : 15.0 * width;
}

// Exact mean over [lo, hi) of a piecewise-linear function with the given kinks.
template <class F>
double piecewise_linear_mean(F&& f, double lo, double hi, std::vector<double> knots) {
  knots.push_back(lo);
  knots.push_back(hi);
  std::sort(knots.begin(), knots.end());
  double sum = 0.0;
  double a = lo;
  double fa = f(lo);
  for (double k : knots) {
    if (k <= a) continue;
    const double b = std::min(k, hi);
    const double fb = f(b);
    sum += 0.5 * (fa + fb) * (b - a);
    a = b;
    fa = fb;
    if (a >= hi) break;
  }
  return sum / (hi - lo);
}

double poisson_nll(const std::vector<double>& y, const std::vector<double>& mu) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = std::max(mu[i], 1e-300);
    s += m - (y[i] > 0.0 ? y[i] * std::log(m) : 0.0);
  }
  return s;
}

// Poisson MLE of the amplitude of `shape` on top of a fixed background.
double profile_amplitude(const std::vector<double>& y, const std::vector<double>& bg,
                         const std::vector<double>& shape) {
  auto score = [&](double a) {
    double g = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) g += shape[i] * (y[i] / std::max(bg[i] + a * shape[i], 1e-12) - 1.0);
    return g;
  };
  if (score(0.0) <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  const double total = std::accumulate(y.begin(), y.end(), 0.0);
  const double shape_max = *std::max_element(shape.begin(), shape.end());
  if (shape_max > 0.0) hi = std::max(hi, 2.0 * total / shape_max + 1.0);
  while (score(hi) > 0.0) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (score(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Histogram coincidence_histogram(const TimeTagStream& stream, std::uint8_t herald_ch, std::uint8_t signal_ch,
                                double bin_ps, double lo_ps, double hi_ps,
                                const std::function<bool(std::uint64_t)>& accept_herald) {
  std::function<int(std::uint64_t)> label;
  if (accept_herald) label = [&](std::uint64_t ts) { return accept_herald(ts) ? 0 : -1; };
  return accumulate(stream, herald_ch, signal_ch, bin_ps, lo_ps, hi_ps, 1, label).front();
}

Histogram coincidence_histogram(const TimeTagStream& stream, std::uint8_t herald_ch, std::uint8_t signal_ch,
                                double bin_ps, double range_ps) {
  return coincidence_histogram(stream, herald_ch, signal_ch, bin_ps, -range_ps, range_ps);
}

std::string to_string(FitKind kind) { return kind == FitKind::flat ? "flat" : "piecewise_gated"; }

std::string to_string(PeakFamily family) {
  switch (family) {
    case PeakFamily::one_sided_exponential:
      return "one_sided_exponential";
    case PeakFamily::two_sided_exponential:
      return "two_sided_exponential";
    case PeakFamily::gaussian:
      return "gaussian";
  }
  return "unknown";
}

PeakFamily peak_family_for(CorrelationShape shape) {
  return shape == CorrelationShape::one_sided ? PeakFamily::one_sided_exponential
                                              : PeakFamily::two_sided_exponential;
}

double bin_average_shape(PeakFamily family, double width, double lo, double hi) {
  return (shape_primitive(family, width, hi) - shape_primitive(family, width, lo)) / (hi - lo);
}

std::vector<double> gated_overlap_column(const Histogram& hist, const GatingConfig& gating, double signal_offset_us,
                                         double herald_start_us, double herald_window_us) {
  const double period = gating.cycle_us();
  const double t_on = gating.t_on_us;
  const double s0 = gating.tau_d_us + signal_offset_us;
  auto overlap = [&](double tau_us) {
    return cyclic_overlap(herald_start_us, herald_start_us + herald_window_us, s0 - tau_us, s0 - tau_us + t_on,
                          period);
  };
  std::vector<double> column(hist.size());
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double lo = hist.bin_low(i) * 1e-6;
    const double hi = lo + hist.bin_width * 1e-6;
    std::vector<double> knots;
    for (double k : {s0 - herald_start_us - herald_window_us, s0 - herald_start_us, s0 + t_on - herald_start_us,
                     s0 + t_on - herald_start_us - herald_window_us}) {
      for (double x = k + period * std::ceil((lo - k) / period); x < hi; x += period) knots.push_back(x);
    }
    column[i] = piecewise_linear_mean(overlap, lo, hi, knots);
  }
  return column;
}

CorrelationResult cross_g2(const Histogram& hist, const CrossG2Options& options) {
  const std::size_t n = hist.size();
  if (n < 8) throw Error(ErrorCode::insufficient_statistics, "histogram has fewer than 8 bins");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<double>(hist.counts[i]);
  const double bin = hist.bin_width;
  const PeakFamily family = options.family;

  // Peak location and a starting width from the half maximum.
  std::size_t search_lo = 0;
  std::size_t search_hi = n;
  if (options.peak_delay_ps && options.search_half_width_ps > 0.0) {
    const double a = (*options.peak_delay_ps - options.search_half_width_ps - hist.start) / bin;
    const double b = (*options.peak_delay_ps + options.search_half_width_ps - hist.start) / bin;
    search_lo = static_cast<std::size_t>(std::clamp(std::floor(a), 0.0, static_cast<double>(n - 1)));
    search_hi = static_cast<std::size_t>(std::clamp(std::ceil(b), 1.0, static_cast<double>(n)));
  }
  const auto top = static_cast<std::size_t>(
      std::max_element(y.begin() + static_cast<std::ptrdiff_t>(search_lo), y.begin() + static_cast<std::ptrdiff_t>(search_hi)) -
      y.begin());
  std::vector<double> sorted = y;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
  const double baseline = sorted[n / 2];
  double width = 0.0;
  if (options.peak_width_ps) {
    width = *options.peak_width_ps;
  } else {
    const double half = baseline + 0.5 * (y[top] - baseline);
    std::size_t l = top;
    std::size_t r = top;
    while (l > 0 && y[l - 1] > half) --l;
    while (r + 1 < n && y[r + 1] > half) ++r;
    width = width_from_fwhm(family, static_cast<double>(r - l + 1) * bin);
  }
  width = std::max(width, 0.25 * bin);
  const double center0 = hist.bin_center(top);
  const double excl = std::max(exclusion_half_width(family, width), 2.0 * bin);
  const double win_lo = std::max(hist.start, center0 - excl);
  const double win_hi = std::min(hist.bin_low(n - 1) + bin, center0 + excl);
  std::vector<std::size_t> peak_bins;
  std::vector<std::size_t> bg_bins;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = hist.bin_low(i);
    (lo + bin > win_lo && lo < win_hi ? peak_bins : bg_bins).push_back(i);
  }
  if (bg_bins.size() < 5) throw Error(ErrorCode::insufficient_statistics, "too few background bins outside the peak");

  // Background design over every bin.
  CorrelationResult out;
  out.peak_family = family;
  std::vector<std::vector<double>> design;
  auto build_design = [&](double tau_d) {
    std::vector<std::vector<double>> cols{std::vector<double>(n, 1.0)};
    if (options.gating) {
      GatingConfig g = *options.gating;
      g.tau_d_us = tau_d;
      const double hs = options.herald_window_start_us.value_or(0.0);
      const double hw = options.herald_window_us.value_or(g.t_on_us);
      cols.push_back(gated_overlap_column(hist, g, 0.0, hs, hw));
      if (options.storage_time_us) cols.push_back(gated_overlap_column(hist, g, *options.storage_time_us, hs, hw));
    }
    return cols;
  };
  auto restrict = [&](const std::vector<std::vector<double>>& cols, const std::vector<std::size_t>& rows) {
    std::vector<std::vector<double>> sub;
    for (const auto& c : cols) {
      std::vector<double> v(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) v[k] = c[rows[k]];
      sub.push_back(std::move(v));
    }
    return sub;
  };
  std::vector<double> y_bg(bg_bins.size());
  for (std::size_t k = 0; k < bg_bins.size(); ++k) y_bg[k] = y[bg_bins[k]];

  // Columns that vanish or duplicate the constant over the background bins are dropped.
  auto fit_background = [&](double tau_d, std::vector<std::vector<double>>& kept) {
    const auto full = build_design(tau_d);
    kept.clear();
    std::vector<std::vector<double>> sub;
    for (const auto& c : full) {
      auto s = restrict({c}, bg_bins).front();
      const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
      if (!kept.empty() && (*mx <= 1e-12 || *mx - *mn <= 1e-12 * *mx)) continue;
      kept.push_back(c);
      sub.push_back(std::move(s));
    }
    while (true) {
      try {
        return poisson_linear_fit(sub, y_bg);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::eigen_failure || sub.size() <= 1) throw;
        sub.pop_back();
        kept.pop_back();
      }
    }
  };

  double tau_d = options.gating ? options.gating->tau_d_us : 0.0;
  LinearFit bg_fit;
  if (options.gating && options.fit_tau_d) {
    const double period = options.gating->cycle_us();
    const double step = std::max(bin * 1e-6, period / 200.0);
    std::vector<std::vector<double>> scratch;
    auto chi2_at = [&](double td) { return fit_background(td, scratch).chi2; };
    double best = tau_d;
    double best_chi2 = chi2_at(best);
    for (double td = -0.5 * period; td < 0.5 * period; td += step) {
      const double c = chi2_at(td);
      if (c < best_chi2) {
        best_chi2 = c;
        best = td;
      }
    }
    double a = best - step;
    double b = best + step;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int i = 0; i < 40; ++i) {
      const double c = b - g * (b - a);
      const double d = a + g * (b - a);
      if (chi2_at(c) < chi2_at(d))
        b = d;
      else
        a = c;
    }
    const double refined = 0.5 * (a + b);
    tau_d = chi2_at(refined) < best_chi2 ? refined : best;
  }
  bg_fit = fit_background(tau_d, design);
  out.tau_d_us = tau_d;
  out.fit_kind = design.size() > 1 ? FitKind::piecewise_gated : FitKind::flat;
  out.background_reduced_chi2 = bg_fit.dof > 0 ? bg_fit.chi2 / bg_fit.dof : 0.0;

  const std::size_t p = design.size();
  auto background_at = [&](std::size_t i) {
    double v = 0.0;
    for (std::size_t j = 0; j < p; ++j) v += bg_fit.coef[j] * design[j][i];
    return v;
  };
  auto background_var = [&](const std::vector<double>& row) {
    double v = 0.0;
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) v += row[a] * bg_fit.covariance[a][b] * row[b];
    return std::max(v, 0.0);
  };

  // Peak fit over the excluded window: amplitude profiled, centre and width by simplex.
  std::vector<double> y_pk(peak_bins.size());
  std::vector<double> bg_pk(peak_bins.size());
  for (std::size_t k = 0; k < peak_bins.size(); ++k) {
    y_pk[k] = y[peak_bins[k]];
    bg_pk[k] = std::max(background_at(peak_bins[k]), 1e-9);
  }
  auto shape_of = [&](double c, double w) {
    std::vector<double> s(peak_bins.size());
    for (std::size_t k = 0; k < peak_bins.size(); ++k) {
      const double lo = hist.bin_low(peak_bins[k]) - c;
      s[k] = bin_average_shape(family, w, lo, lo + bin);
    }
    return s;
  };
  auto mean_of = [&](double a, const std::vector<double>& s) {
    std::vector<double> mu(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) mu[k] = bg_pk[k] + a * s[k];
    return mu;
  };
  auto objective = [&](const std::vector<double>& v) {
    const double w = std::exp(v[1]);
    const auto s = shape_of(v[0], w);
    return poisson_nll(y_pk, mean_of(profile_amplitude(y_pk, bg_pk, s), s));
  };
  const double center_start = family == PeakFamily::one_sided_exponential ? center0 - 0.5 * bin : center0;
  const auto best = nelder_mead(objective, {center_start, std::log(width)}, {0.5 * bin, 0.3}, 1e-12, 3000);
  const double c = std::clamp(best.x[0], win_lo, win_hi);
  const double w = std::exp(best.x[1]);
  const auto s = shape_of(c, w);
  const double amplitude = profile_amplitude(y_pk, bg_pk, s);

  // Fisher information of (amplitude, centre, width) for the amplitude variance.
  const auto mu = mean_of(amplitude, s);
  const double hc = 1e-3 * w;
  const auto s_cp = shape_of(c + hc, w);
  const auto s_cm = shape_of(c - hc, w);
  const auto s_wp = shape_of(c, w * (1.0 + 1e-3));
  const auto s_wm = shape_of(c, w * (1.0 - 1e-3));
  std::vector<std::vector<double>> fisher(3, std::vector<double>(3, 0.0));
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double grad[3] = {s[k], amplitude * (s_cp[k] - s_cm[k]) / (2.0 * hc),
                            amplitude * (s_wp[k] - s_wm[k]) / (2e-3 * w)};
    const double m = std::max(mu[k], 1e-9);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) fisher[a][b] += grad[a] * grad[b] / m;
  }
  double var_amplitude = 0.0;
  try {
    var_amplitude = invert_spd(fisher)[0][0];
  } catch (const Error&) {
    var_amplitude = fisher[0][0] > 0.0 ? 1.0 / fisher[0][0] : 0.0;
  }

  const auto center_index = static_cast<std::size_t>(
      std::clamp(std::floor((c - hist.start) / bin), 0.0, static_cast<double>(n - 1)));
  std::vector<double> row(p);
  for (std::size_t j = 0; j < p; ++j) row[j] = design[j][center_index];
  double background = background_at(center_index);
  const double var_background = background_var(row);

  const double bg_total = std::accumulate(y_bg.begin(), y_bg.end(), 0.0);
  if (bg_total <= 0.0 || background <= 0.0) {
    out.lower_bound = true;
    background = std::max(background, (bg_total + 1.0) / static_cast<double>(bg_bins.size()));
  }
  out.peak_delay_ps = c;
  out.peak_width_ps = w;
  out.amplitude_per_bin = amplitude;
  out.background_per_bin = background;
  out.background_stderr = std::sqrt(var_background);
  out.g2_max = 1.0 + amplitude / background;
  const double rel = out.lower_bound ? 0.0 : var_background * amplitude * amplitude / std::pow(background, 4);
  out.g2_stderr = std::sqrt(var_amplitude / (background * background) + rel);

  out.window_lo_ps = win_lo;
  out.window_hi_ps = win_hi;
  std::vector<double> window_row(p, 0.0);
  double observed = 0.0;
  double expected_bg = 0.0;
  for (const auto i : peak_bins) {
    observed += y[i];
    expected_bg += background_at(i);
    for (std::size_t j = 0; j < p; ++j) window_row[j] += design[j][i];
  }
  out.net_counts = observed - expected_bg;
  out.net_counts_stderr = std::sqrt(observed + background_var(window_row));
  return out;
}

AutoG2Result heralded_auto_g2(const TimeTagStream& stream, std::uint8_t herald_ch, std::uint8_t arm_a,
                              std::uint8_t arm_b, const AutoG2Options& options) {
  if (!stream.is_sorted()) throw Error(ErrorCode::unsorted_stream, "timestamps decrease");
  if (!(options.window_ns > 0.0) || options.dn_max < 1)
    throw Error(ErrorCode::domain_error, "window must be > 0 and dn_max >= 1");
  const auto heralds = stream.channel_times(herald_ch);
  const auto a_times = stream.channel_times(arm_a);
  const auto b_times = stream.channel_times(arm_b);
  const double start = 1e3 * options.window_start_ns.value_or(-0.5 * options.window_ns);
  const double length = 1e3 * options.window_ns;

  auto flags = [&](const std::vector<std::uint64_t>& arm) {
    std::vector<std::uint8_t> f(heralds.size(), 0);
    std::size_t j = 0;
    for (std::size_t i = 0; i < heralds.size(); ++i) {
      const double lo = static_cast<double>(heralds[i]) + start;
      while (j < arm.size() && static_cast<double>(arm[j]) < lo) ++j;
      f[i] = j < arm.size() && static_cast<double>(arm[j]) < lo + length;
    }
    return f;
  };
  const auto fa = flags(a_times);
  const auto fb = flags(b_times);
  const auto nh = static_cast<std::int64_t>(heralds.size());
  if (nh <= options.dn_max) throw Error(ErrorCode::insufficient_statistics, "fewer heralds than dn_max");

  auto triples = [&](int dn) {
    std::uint64_t count = 0;
    for (std::int64_t i = std::max<std::int64_t>(0, -dn); i < nh && i + dn < nh; ++i)
      count += fa[static_cast<std::size_t>(i)] & fb[static_cast<std::size_t>(i + dn)];
    return count;
  };
  AutoG2Result out;
  out.heralds = static_cast<std::uint64_t>(nh);
  out.triples = triples(0);
  double norm_sum = 0.0;
  double offset_total = 0.0;
  for (int dn = -options.dn_max; dn <= options.dn_max; ++dn) {
    if (dn == 0) continue;
    const auto c = triples(dn);
    if (c == 0) throw Error(ErrorCode::insufficient_statistics, "empty offset bin dn = " + std::to_string(dn));
    offset_total += static_cast<double>(c);
    norm_sum += static_cast<double>(c) / static_cast<double>(nh - std::abs(dn));
  }
  const double mean_norm = norm_sum / (2.0 * options.dn_max);
  out.mean_offset_triples = offset_total / (2.0 * options.dn_max);
  const double zero = static_cast<double>(out.triples) / static_cast<double>(nh);
  out.g2 = zero / mean_norm;
  const double zero_err = std::sqrt(std::max(1.0, static_cast<double>(out.triples))) / static_cast<double>(nh);
  out.g2_stderr = std::sqrt(std::pow(zero_err / mean_norm, 2) + std::pow(out.g2, 2) / offset_total);
  return out;
}

double cauchy_schwarz(double g2_hs, double g2_hh, double g2_ss) {
  const double denom = g2_hh * g2_ss;
  if (!(denom > 0.0)) throw Error(ErrorCode::division_by_zero, "auto-correlations must be > 0");
  return g2_hs * g2_hs / denom;
}

double time_bandwidth_product(double storage_time_us, double echo_fwhm_ns) {
  if (!(echo_fwhm_ns > 0.0)) throw Error(ErrorCode::domain_error, "echo fwhm must be > 0");
  return storage_time_us * 1e3 / echo_fwhm_ns;
}

double background_from_peak(double rate_cps, double g2, double integral_bins) {
  if (!(g2 > 1.0) || !(integral_bins > 0.0))
    throw Error(ErrorCode::domain_error, "need g2 > 1 and a positive peak area");
  return rate_cps / ((g2 - 1.0) * integral_bins);
}

NoiseBudget solve_noise_budget(const NoiseInputs& in, double echo_background_stderr, double echo_rate_stderr,
                               double source_rate_stderr) {
  NoiseBudget out;
  if (in.echo_background_cps < 0.0)
    throw Error(ErrorCode::model_inconsistent, "derived total echo background is negative");
  out.d_total = in.echo_background_cps;
  out.d_total_stderr = echo_background_stderr;
  if (in.efficiency) {
    out.overall_efficiency = *in.efficiency;
  } else {
    if (!(in.source_rate_cps > 0.0)) throw Error(ErrorCode::division_by_zero, "source coincidence rate is zero");
    out.overall_efficiency = in.echo_rate_cps / in.source_rate_cps;
    out.overall_efficiency_stderr =
        out.overall_efficiency * std::hypot(in.echo_rate_cps > 0.0 ? echo_rate_stderr / in.echo_rate_cps : 0.0,
                                            source_rate_stderr / in.source_rate_cps);
  }
  const double bin_ratio = in.echo_bin_ps / in.source_bin_ps;
  out.source_share = out.overall_efficiency * in.source_background_cps * bin_ratio;
  out.d_afc_plus_snspd = out.d_total - out.source_share;
  const double share_err = out.overall_efficiency_stderr * in.source_background_cps * bin_ratio;
  out.d_afc_plus_snspd_stderr = std::hypot(out.d_total_stderr, share_err);
  out.d_snspd = in.d_snspd_cps;
  out.d_afc = out.d_afc_plus_snspd - in.d_snspd_cps;
  return out;
}

NoiseBudget noise_budget(const Histogram& source_hist, const CorrelationResult& source, const Histogram& echo_hist,
                         const CorrelationResult& echo, std::optional<double> efficiency, double d_snspd_cps) {
  if (!(source_hist.acquisition_s > 0.0) || !(echo_hist.acquisition_s > 0.0))
    throw Error(ErrorCode::domain_error, "histograms need an acquisition time");
  NoiseInputs in;
  in.echo_rate_cps = echo.net_counts / echo_hist.acquisition_s;
  in.echo_background_cps = echo.background_per_bin / echo_hist.acquisition_s;
  in.echo_bin_ps = echo_hist.bin_width;
  in.source_rate_cps = source.net_counts / source_hist.acquisition_s;
  in.source_background_cps = source.background_per_bin / source_hist.acquisition_s;
  in.source_bin_ps = source_hist.bin_width;
  in.efficiency = efficiency;
  in.d_snspd_cps = d_snspd_cps;
  return solve_noise_budget(in, echo.background_stderr / echo_hist.acquisition_s,
                            echo.net_counts_stderr / echo_hist.acquisition_s,
                            source.net_counts_stderr / source_hist.acquisition_s);
}

MultimodeStats multimode_stats(const TimeTagStream& stream, const ModeSchedule& schedule,
                               const MultimodeOptions& options) {
  const double center = options.storage_time_us * 1e6;
  auto hists = accumulate(stream, options.herald_ch, options.signal_ch, options.bin_ps,
                          center - options.half_range_ps, center + options.half_range_ps, schedule.modes,
                          [&](std::uint64_t ts) { return schedule.mode_of(ts).value_or(-1); });
  MultimodeStats out;
  out.modes.resize(static_cast<std::size_t>(schedule.modes));
  parallel_for(out.modes.size(), resolve_jobs(options.jobs), [&](std::size_t m) {
    CrossG2Options fit = options.fit;
    fit.herald_window_start_us = schedule.slot_start_us(static_cast<int>(m));
    fit.herald_window_us = schedule.slot_ns * 1e-3;
    if (!fit.storage_time_us) fit.storage_time_us = options.storage_time_us;
    if (!fit.peak_delay_ps) fit.peak_delay_ps = center;
    if (fit.search_half_width_ps <= 0.0) fit.search_half_width_ps = 20e3;
    auto& stat = out.modes[m];
    stat.mode = static_cast<int>(m);
    stat.correlation = cross_g2(hists[m], fit);
    const double t = hists[m].acquisition_s > 0.0 ? hists[m].acquisition_s : 1.0;
    stat.rate_cps = stat.correlation.net_counts / t;
    stat.rate_stderr = stat.correlation.net_counts_stderr / t;
  });

  std::vector<double> x;
  std::vector<double> g2;
  std::vector<double> g2_err;
  double cumulative = 0.0;
  for (const auto& m : out.modes) {
    cumulative += m.rate_cps;
    out.cumulative_rate_cps.push_back(cumulative);
    x.push_back(static_cast<double>(m.mode + 1));
    g2.push_back(m.correlation.g2_max);
    g2_err.push_back(std::max(m.correlation.g2_stderr, 1e-12));
  }
  if (out.modes.size() >= 2) {
    out.cumulative_fit = fit_line(x, out.cumulative_rate_cps);
    std::vector<double> index(x.size());
    std::iota(index.begin(), index.end(), 0.0);
    out.g2_trend = fit_line(index, g2, g2_err);
  } else if (out.modes.size() == 1) {
    out.cumulative_fit = {out.cumulative_rate_cps.front(), 0.0, 0.0, 1.0};
    out.g2_trend = {0.0, g2.front(), 0.0, 1.0};
  }
  return out;
}

LossBudget loss_budget(const std::vector<LossComponent>& components) {
  LossBudget out;
  for (const auto& c : components) {
    if (!(c.fraction > 0.0 && c.fraction <= 1.0))
      throw Error(ErrorCode::domain_error, "loss component '" + c.name + "' must lie in (0, 1]");
    out.total *= c.fraction;
    if (c.internal) out.internal *= c.fraction;
    out.partials.push_back(out.total);
  }
  return out;
}

std::vector<LossComponent> reference_loss_components() {
  return {{"gating duty cycle", 0.19, false},     {"gating aom insertion", 0.70, false},
          {"interconnect fiber", 0.45, false},    {"interconnect collection", 0.18, false},
          {"afc storage", 0.05, true},            {"polarization selection", 0.50, true},
          {"spectral selection", 0.20, true}};
}

}  // namespace hqnet
