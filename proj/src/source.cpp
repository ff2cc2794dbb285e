#include "hqnet/source.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "hqnet/error.h"

namespace hqnet {

void validate(const SourceConfig& cfg) {
  auto fail = [](const char* what) { throw Error(ErrorCode::domain_error, what); };
  if (!(cfg.pair_rate_cps >= 0.0)) fail("source pair rate must be >= 0");
  if (!(cfg.herald_singles_cps >= cfg.pair_rate_cps)) fail("herald singles rate must be >= pair rate");
  if (!(cfg.signal_singles_cps >= cfg.pair_rate_cps)) fail("signal singles rate must be >= pair rate");
  if (!(cfg.correlation_time_ns > 0.0)) fail("correlation time must be > 0");
  if (!(cfg.g2_cross_max >= 1.0)) fail("g2_cross_max must be >= 1");
  if (!(cfg.power1_mw > 0.0) || !(cfg.power2_mw > 0.0)) fail("reference pump powers must be > 0");
  if (!(cfg.spectral_slope > 0.0 && cfg.spectral_slope < 1.0)) fail("spectral slope must lie in (0, 1)");
}

double scaled_pair_rate(const SourceConfig& cfg, double p1, double p2) {
  if (!(p1 > 0.0) || !(p2 > 0.0)) throw Error(ErrorCode::domain_error, "pump powers must be > 0");
  return cfg.pair_rate_cps * (p1 / cfg.power1_mw) * (p2 / cfg.power2_mw);
}

double feature_center(const SourceConfig& cfg, double delta2) {
  if (!(cfg.spectral_slope > 0.0 && cfg.spectral_slope < 1.0))
    throw Error(ErrorCode::domain_error, "spectral slope must lie in (0, 1)");
  return cfg.spectral_slope * (delta2 - cfg.delta2_mhz);
}

double cross_correlation_profile(const SourceConfig& cfg, double tau, double tau0) {
  const double x = tau - tau0;
  if (cfg.shape == CorrelationShape::one_sided && x < 0.0) return 1.0;
  return 1.0 + (cfg.g2_cross_max - 1.0) * std::exp(-std::abs(x) / cfg.correlation_time_ns);
}

double delay_density_peak_per_ns(CorrelationShape shape, double tau_c) {
  return shape == CorrelationShape::symmetric ? 0.5 / tau_c : 1.0 / tau_c;
}

double mean_pair_number(double r_h, double r_s, double r_c, double tau_c_ns) {
  if (r_c == 0.0) throw Error(ErrorCode::division_by_zero, "coincidence rate is zero");
  return r_h * r_s / r_c * tau_c_ns * 1e-9;
}

std::vector<OperatingPoint> load_operating_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open operating table " + path.string());
  std::vector<OperatingPoint> table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("delta2", 0) == 0) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    OperatingPoint p;
    if (!(fields >> p.delta2_mhz >> p.pair_rate_cps >> p.g2_max))
      throw Error(ErrorCode::config_invalid,
                  path.string() + ":" + std::to_string(line_no) + ": expected delta2_MHz,pair_rate_cps,g2_max");
    table.push_back(p);
  }
  if (table.empty()) throw Error(ErrorCode::config_invalid, path.string() + ": operating table is empty");
  std::sort(table.begin(), table.end(),
            [](const OperatingPoint& a, const OperatingPoint& b) { return a.delta2_mhz < b.delta2_mhz; });
  return table;
}

OperatingPoint interpolate(const std::vector<OperatingPoint>& table, double delta2) {
  if (table.empty()) throw Error(ErrorCode::domain_error, "operating table is empty");
  if (delta2 < table.front().delta2_mhz || delta2 > table.back().delta2_mhz)
    throw Error(ErrorCode::domain_error, "delta2 outside the operating table");
  auto hi = std::lower_bound(table.begin(), table.end(), delta2,
                             [](const OperatingPoint& p, double d) { return p.delta2_mhz < d; });
  if (hi->delta2_mhz == delta2) return *hi;
  auto lo = hi - 1;
  const double t = (delta2 - lo->delta2_mhz) / (hi->delta2_mhz - lo->delta2_mhz);
  return {delta2, lo->pair_rate_cps + t * (hi->pair_rate_cps - lo->pair_rate_cps),
          lo->g2_max + t * (hi->g2_max - lo->g2_max)};
}

}  // namespace hqnet
