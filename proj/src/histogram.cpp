#include "hqnet/histogram.h"

#include <cmath>
#include <numeric>
#include <ostream>

#include "hqnet/error.h"

namespace hqnet {

Histogram Histogram::with_range(double start, double end, double bin_width, Axis axis) {
  if (!(bin_width > 0.0) || !(end > start)) throw Error(ErrorCode::domain_error, "invalid histogram range");
  Histogram h;
  h.start = start;
  h.end = end;
  h.bin_width = bin_width;
  h.axis = axis;
  h.counts.assign(static_cast<std::size_t>(std::ceil((end - start) / bin_width - 1e-12)), 0);
  return h;
}

std::uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::ptrdiff_t Histogram::index_of(double x) const {
  if (x < start || x >= end) return -1;
  const auto i = static_cast<std::ptrdiff_t>(std::floor((x - start) / bin_width));
  return i < static_cast<std::ptrdiff_t>(counts.size()) ? i : -1;
}

void Histogram::write_csv(std::ostream& out) const {
  if (!provenance.empty()) out << "# scenario_hash=" << provenance << '\n';
  out << (axis == Axis::delay ? "delay_ps,counts\n" : "nu_MHz,counts\n");
  out.precision(15);
  for (std::size_t i = 0; i < counts.size(); ++i) out << bin_low(i) << ',' << counts[i] << '\n';
}

Histogram rebin(const Histogram& h, std::size_t factor) {
  if (factor == 0) throw Error(ErrorCode::domain_error, "rebin factor must be >= 1");
  Histogram out = h;
  out.bin_width = h.bin_width * static_cast<double>(factor);
  out.counts.assign((h.counts.size() + factor - 1) / factor, 0);
  for (std::size_t i = 0; i < h.counts.size(); ++i) out.counts[i / factor] += h.counts[i];
  return out;
}

}  // namespace hqnet
