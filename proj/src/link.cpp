#include "hqnet/link.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "hqnet/error.h"

namespace hqnet {

namespace {

constexpr double kLightKmPerUs = 0.299792458;

double interval_overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

void validate(const FiberConfig& f) {
  if (!(f.length_km >= 0.0)) throw Error(ErrorCode::config_invalid, "link.length_km must be >= 0");
  if (!(f.excess_loss_db >= 0.0)) throw Error(ErrorCode::config_invalid, "link.excess_loss_dB must be >= 0");
  if (!(f.attenuation_db_per_km >= 0.0))
    throw Error(ErrorCode::config_invalid, "link.attenuation_dB_per_km must be >= 0");
  if (!(f.group_index >= 1.0)) throw Error(ErrorCode::config_invalid, "link.group_index must be >= 1");
}

double fiber_transmission(const FiberConfig& f) {
  return std::pow(10.0, -(f.length_km * f.attenuation_db_per_km + f.excess_loss_db) / 10.0);
}

double fiber_delay_us(const FiberConfig& f) { return f.length_km * f.group_index / kLightKmPerUs; }

FiberConfig concatenate(const FiberConfig& a, const FiberConfig& b) {
  FiberConfig out;
  out.length_km = a.length_km + b.length_km;
  const double loss = a.length_km * a.attenuation_db_per_km + b.length_km * b.attenuation_db_per_km;
  out.attenuation_db_per_km = out.length_km > 0.0 ? loss / out.length_km : a.attenuation_db_per_km;
  out.excess_loss_db = a.excess_loss_db + b.excess_loss_db;
  const double delay = a.length_km * a.group_index + b.length_km * b.group_index;
  out.group_index = out.length_km > 0.0 ? delay / out.length_km : a.group_index;
  return out;
}

void validate(const GatingConfig& g) {
  if (!(g.t_on_us > 0.0)) throw Error(ErrorCode::config_invalid, "gating.t_on_us must be > 0");
  if (!(g.t_off_us > 0.0)) throw Error(ErrorCode::config_invalid, "gating.t_off_us must be > 0");
  if (!(g.background_rate >= 0.0)) throw Error(ErrorCode::config_invalid, "gating.background_rate must be >= 0");
}

std::string GatingReport::message() const {
  if (ok) return "gating ok";
  std::string out = "requirement on the gating parameters violated:";
  for (const auto& v : violations) out += " " + v + ";";
  return out;
}

GatingReport validate_gating(const GatingConfig& g, double tau_afc) {
  GatingReport r;
  if (!(g.t_on_us < tau_afc)) r.violations.push_back("T_on < tau_AFC fails");
  if (!(tau_afc < g.t_off_us)) r.violations.push_back("tau_AFC < T_off fails");
  r.ok = r.violations.empty();
  return r;
}

double cyclic_overlap(double a0, double a1, double b0, double b1, double period) {
  const double wa = a1 - a0;
  const double wb = b1 - b0;
  double s = std::fmod(b0 - a0, period);
  if (s < 0.0) s += period;
  return interval_overlap(0.0, wa, s, s + wb) + interval_overlap(0.0, wa, s - period, s - period + wb);
}

double background_profile(const GatingConfig& g, double tau) {
  // Herald at t in [0, t_on), signal at t + tau in [tau_d, tau_d + t_on).
  return g.background_rate * cyclic_overlap(0.0, g.t_on_us, g.tau_d_us - tau, g.tau_d_us - tau + g.t_on_us,
                                            g.cycle_us());
}

void write_background_csv(std::ostream& out, const GatingConfig& g, double t0, double t1, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::domain_error, "step must be > 0");
  out << "tau_us,expected_counts\n";
  out.precision(12);
  const auto n = static_cast<long long>(std::floor((t1 - t0) / step + 1e-9));
  for (long long i = 0; i <= n; ++i) {
    const double tau = t0 + step * static_cast<double>(i);
    out << tau << ',' << background_profile(g, tau) << '\n';
  }
}

}  // namespace hqnet
