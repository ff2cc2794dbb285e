#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hqnet {

enum class Axis { delay, frequency };

// Uniform bins over [start, end). Delay axes are in picoseconds, frequency axes in MHz.
struct Histogram {
  double start = 0.0;
  double bin_width = 1.0;
  double end = 0.0;
  std::vector<std::uint64_t> counts;
  Axis axis = Axis::delay;
  double live_time_s = 0.0;     // storage-window time behind the counts, 0 if not applicable
  double acquisition_s = 0.0;   // wall-clock time behind the counts
  std::string provenance;

  static Histogram with_range(double start, double end, double bin_width, Axis axis);

  std::size_t size() const { return counts.size(); }
  double bin_low(std::size_t i) const { return start + bin_width * static_cast<double>(i); }
  double bin_center(std::size_t i) const { return bin_low(i) + 0.5 * bin_width; }
  std::uint64_t total() const;
  // Index of the bin holding x, or -1 when x lies outside [start, end).
  std::ptrdiff_t index_of(double x) const;

  void write_csv(std::ostream& out) const;
};

// Sums groups of `factor` adjacent bins; a trailing partial group forms the last bin.
Histogram rebin(const Histogram& h, std::size_t factor);

}  // namespace hqnet
