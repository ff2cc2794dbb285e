#include "hqnet/scenario.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "hqnet/config_text.h"
#include "hqnet/error.h"

namespace hqnet {

namespace {

std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

[[noreturn]] void bad(const ConfigEntry& e, const std::string& what) {
  throw Error(ErrorCode::config_invalid,
              "line " + std::to_string(e.value.line) + ": key '" + e.key + "': " + what);
}

double as_number(const ConfigEntry& e) {
  if (e.value.kind != ConfigValue::Kind::number) bad(e, "expected a number");
  return e.value.number;
}

bool as_bool(const ConfigEntry& e) {
  if (e.value.kind != ConfigValue::Kind::boolean) bad(e, "expected true or false");
  return e.value.boolean;
}

const std::string& as_string(const ConfigEntry& e) {
  if (e.value.kind != ConfigValue::Kind::string) bad(e, "expected a quoted string");
  return e.value.text;
}

struct Field {
  std::string key;
  std::function<void(ScenarioConfig&, const ConfigEntry&)> read;
  std::function<std::string(const ScenarioConfig&)> write;
};

using RealRef = std::function<double&(ScenarioConfig&)>;
using BoolRef = std::function<bool&(ScenarioConfig&)>;

Field real(std::string key, RealRef ref) {
  return {std::move(key), [ref](ScenarioConfig& c, const ConfigEntry& e) { ref(c) = as_number(e); },
          [ref](const ScenarioConfig& c) { return format_number(ref(const_cast<ScenarioConfig&>(c))); }};
}

Field flag(std::string key, BoolRef ref) {
  return {std::move(key), [ref](ScenarioConfig& c, const ConfigEntry& e) { ref(c) = as_bool(e); },
          [ref](const ScenarioConfig& c) -> std::string {
            return ref(const_cast<ScenarioConfig&>(c)) ? "true" : "false";
          }};
}

std::string quote(const std::string& s) {
  ConfigValue v;
  v.kind = ConfigValue::Kind::string;
  v.text = s;
  return format_value(v);
}

std::string shape_name(LineShape s) { return s == LineShape::gaussian ? "gaussian" : "lorentzian"; }

std::vector<SpectralFeature> read_features(const ConfigEntry& e) {
  if (e.value.kind != ConfigValue::Kind::array) bad(e, "expected an array of [center, fwhm, weight, shape]");
  std::vector<SpectralFeature> out;
  for (const auto& item : e.value.items) {
    if (item.kind != ConfigValue::Kind::array || item.items.size() != 4 ||
        item.items[0].kind != ConfigValue::Kind::number || item.items[1].kind != ConfigValue::Kind::number ||
        item.items[2].kind != ConfigValue::Kind::number || item.items[3].kind != ConfigValue::Kind::string)
      bad(e, "each feature must be [center_MHz, fwhm_MHz, weight, \"gaussian\"|\"lorentzian\"]");
    SpectralFeature f;
    f.center_mhz = item.items[0].number;
    f.fwhm_mhz = item.items[1].number;
    f.weight = item.items[2].number;
    const auto& shape = item.items[3].text;
    if (shape == "gaussian") f.shape = LineShape::gaussian;
    else if (shape == "lorentzian") f.shape = LineShape::lorentzian;
    else bad(e, "unknown line shape '" + shape + "'");
    out.push_back(f);
  }
  return out;
}

std::string write_features(const std::vector<SpectralFeature>& features) {
  std::string out = "[";
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    out += std::string(i ? "," : "") + "\n  [" + format_number(f.center_mhz) + ", " + format_number(f.fwhm_mhz) +
           ", " + format_number(f.weight) + ", " + quote(shape_name(f.shape)) + "]";
  }
  return out + (features.empty() ? "]" : "\n]");
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    t.push_back({"scenario.name", [](ScenarioConfig& c, const ConfigEntry& e) { c.name = as_string(e); },
                 [](const ScenarioConfig& c) { return quote(c.name); }});

    t.push_back(real("run.duration_s", [](ScenarioConfig& c) -> double& { return c.run.duration_s; }));
    t.push_back({"run.seed",
                 [](ScenarioConfig& c, const ConfigEntry& e) {
                   if (e.value.kind != ConfigValue::Kind::number) bad(e, "expected an unsigned integer");
                   const auto& s = e.value.text;
                   const auto r = std::from_chars(s.data(), s.data() + s.size(), c.run.seed);
                   if (r.ec != std::errc() || r.ptr != s.data() + s.size()) bad(e, "expected an unsigned integer");
                 },
                 [](const ScenarioConfig& c) { return std::to_string(c.run.seed); }});
    t.push_back(real("run.storage_duty", [](ScenarioConfig& c) -> double& { return c.run.storage_duty; }));

    auto src = [](ScenarioConfig& c) -> SourceConfig& { return c.source.model; };
    t.push_back(real("source.pair_rate_cps", [src](ScenarioConfig& c) -> double& { return src(c).pair_rate_cps; }));
    t.push_back(real("source.herald_singles_cps",
                     [src](ScenarioConfig& c) -> double& { return src(c).herald_singles_cps; }));
    t.push_back(real("source.signal_singles_cps",
                     [src](ScenarioConfig& c) -> double& { return src(c).signal_singles_cps; }));
    t.push_back(real("source.correlation_time_ns",
                     [src](ScenarioConfig& c) -> double& { return src(c).correlation_time_ns; }));
    t.push_back(real("source.g2_cross_max", [src](ScenarioConfig& c) -> double& { return src(c).g2_cross_max; }));
    t.push_back({"source.correlation_shape",
                 [src](ScenarioConfig& c, const ConfigEntry& e) {
                   const auto& s = as_string(e);
                   if (s == "symmetric") src(c).shape = CorrelationShape::symmetric;
                   else if (s == "one_sided") src(c).shape = CorrelationShape::one_sided;
                   else bad(e, "expected \"symmetric\" or \"one_sided\"");
                 },
                 [](const ScenarioConfig& c) {
                   return quote(c.source.model.shape == CorrelationShape::symmetric ? "symmetric" : "one_sided");
                 }});
    t.push_back(real("source.delta1_MHz", [src](ScenarioConfig& c) -> double& { return src(c).delta1_mhz; }));
    t.push_back(real("source.reference_delta2_MHz",
                     [src](ScenarioConfig& c) -> double& { return src(c).delta2_mhz; }));
    t.push_back(real("source.delta2_MHz",
                     [](ScenarioConfig& c) -> double& { return c.source.operating_delta2_mhz; }));
    t.push_back(real("source.reference_power1_mW", [src](ScenarioConfig& c) -> double& { return src(c).power1_mw; }));
    t.push_back(real("source.reference_power2_mW", [src](ScenarioConfig& c) -> double& { return src(c).power2_mw; }));
    t.push_back(real("source.pump1_mW", [](ScenarioConfig& c) -> double& { return c.source.pump1_mw; }));
    t.push_back(real("source.pump2_mW", [](ScenarioConfig& c) -> double& { return c.source.pump2_mw; }));
    t.push_back(real("source.spectral_slope", [src](ScenarioConfig& c) -> double& { return src(c).spectral_slope; }));
    t.push_back({"source.singles_model",
                 [](ScenarioConfig& c, const ConfigEntry& e) {
                   const auto& s = as_string(e);
                   if (s == "rates") c.source.singles_model = SinglesModel::rates;
                   else if (s == "g2_target") c.source.singles_model = SinglesModel::g2_target;
                   else bad(e, "expected \"rates\" or \"g2_target\"");
                 },
                 [](const ScenarioConfig& c) {
                   return quote(c.source.singles_model == SinglesModel::rates ? "rates" : "g2_target");
                 }});
    t.push_back({"source.operating_table",
                 [](ScenarioConfig& c, const ConfigEntry& e) { c.source.operating_table = as_string(e); },
                 [](const ScenarioConfig& c) { return quote(c.source.operating_table); }});
    t.push_back(real("source.spectrum.reference_frequency_GHz",
                     [](ScenarioConfig& c) -> double& { return c.source.spectrum.reference_frequency_ghz; }));
    t.push_back(flag("source.spectrum.illustrative",
                     [](ScenarioConfig& c) -> bool& { return c.source.spectrum_illustrative; }));
    t.push_back({"source.spectrum.features",
                 [](ScenarioConfig& c, const ConfigEntry& e) { c.source.spectrum.features = read_features(e); },
                 [](const ScenarioConfig& c) { return write_features(c.source.spectrum.features); }});

    t.push_back(flag("memory.enabled", [](ScenarioConfig& c) -> bool& { return c.memory.enabled; }));
    auto afc = [](ScenarioConfig& c) -> AfcConfig& { return c.memory.afc; };
    t.push_back(real("memory.comb_spacing_MHz", [afc](ScenarioConfig& c) -> double& { return afc(c).comb_spacing_mhz; }));
    t.push_back(real("memory.comb_bandwidth_MHz",
                     [afc](ScenarioConfig& c) -> double& { return afc(c).comb_bandwidth_mhz; }));
    t.push_back(real("memory.comb_center_MHz", [afc](ScenarioConfig& c) -> double& { return afc(c).comb_center_mhz; }));
    t.push_back(real("memory.tooth_optical_depth",
                     [afc](ScenarioConfig& c) -> double& { return afc(c).tooth_optical_depth; }));
    t.push_back(real("memory.background_depth", [afc](ScenarioConfig& c) -> double& { return afc(c).background_depth; }));
    t.push_back(real("memory.finesse", [afc](ScenarioConfig& c) -> double& { return afc(c).finesse; }));
    t.push_back(real("memory.echo_width_constant",
                     [afc](ScenarioConfig& c) -> double& { return afc(c).echo_width_constant; }));
    t.push_back(real("memory.efficiency", [](ScenarioConfig& c) -> double& { return c.memory.efficiency; }));
    t.push_back(real("memory.polarization_factor",
                     [](ScenarioConfig& c) -> double& { return c.memory.polarization_factor; }));
    t.push_back(real("memory.noise_rate_cps", [](ScenarioConfig& c) -> double& { return c.memory.noise_rate_cps; }));
    t.push_back(flag("memory.second_order_echo", [](ScenarioConfig& c) -> bool& { return c.memory.second_order_echo; }));
    t.push_back(real("memory.field_T", [](ScenarioConfig& c) -> double& { return c.memory.field_t; }));
    auto er = [](ScenarioConfig& c) -> ErTransitionConfig& { return c.memory.transition; };
    t.push_back(real("memory.transition.zero_field_frequency_GHz",
                     [er](ScenarioConfig& c) -> double& { return er(c).zero_field_frequency_ghz; }));
    t.push_back(real("memory.transition.g_excited", [er](ScenarioConfig& c) -> double& { return er(c).g_excited; }));
    t.push_back(real("memory.transition.g_ground", [er](ScenarioConfig& c) -> double& { return er(c).g_ground; }));
    t.push_back(real("memory.transition.inhomogeneous_fwhm_MHz",
                     [er](ScenarioConfig& c) -> double& { return er(c).inhomogeneous_fwhm_mhz; }));
    t.push_back(real("memory.transition.electron_splitting_GHz_per_T",
                     [er](ScenarioConfig& c) -> double& { return er(c).electron_splitting_ghz_per_t; }));
    t.push_back(real("memory.transition.temperature_K",
                     [er](ScenarioConfig& c) -> double& { return er(c).temperature_k; }));

    t.push_back(flag("link.enabled", [](ScenarioConfig& c) -> bool& { return c.link.enabled; }));
    t.push_back(real("link.length_km", [](ScenarioConfig& c) -> double& { return c.link.fiber.length_km; }));
    t.push_back(real("link.attenuation_dB_per_km",
                     [](ScenarioConfig& c) -> double& { return c.link.fiber.attenuation_db_per_km; }));
    t.push_back(real("link.excess_loss_dB", [](ScenarioConfig& c) -> double& { return c.link.fiber.excess_loss_db; }));
    t.push_back(real("link.group_index", [](ScenarioConfig& c) -> double& { return c.link.fiber.group_index; }));
    t.push_back(real("link.interconnect_transmission",
                     [](ScenarioConfig& c) -> double& { return c.link.interconnect_transmission; }));
    t.push_back(real("link.collection_efficiency",
                     [](ScenarioConfig& c) -> double& { return c.link.collection_efficiency; }));
    t.push_back(flag("link.compensate_delay", [](ScenarioConfig& c) -> bool& { return c.link.compensate_delay; }));

    t.push_back(flag("gating.enabled", [](ScenarioConfig& c) -> bool& { return c.gating.enabled; }));
    t.push_back(real("gating.t_on_us", [](ScenarioConfig& c) -> double& { return c.gating.window.t_on_us; }));
    t.push_back(real("gating.t_off_us", [](ScenarioConfig& c) -> double& { return c.gating.window.t_off_us; }));
    t.push_back(real("gating.tau_d_us", [](ScenarioConfig& c) -> double& { return c.gating.window.tau_d_us; }));
    t.push_back(real("gating.background_rate",
                     [](ScenarioConfig& c) -> double& { return c.gating.window.background_rate; }));
    t.push_back(real("gating.aom_transmission", [](ScenarioConfig& c) -> double& { return c.gating.aom_transmission; }));

    auto det = [](ScenarioConfig& c) -> DetectorSection& { return c.detectors; };
    t.push_back(real("detectors.herald_efficiency",
                     [det](ScenarioConfig& c) -> double& { return det(c).herald_efficiency; }));
    t.push_back(real("detectors.signal_efficiency",
                     [det](ScenarioConfig& c) -> double& { return det(c).signal_efficiency; }));
    t.push_back(real("detectors.herald_dark_cps", [det](ScenarioConfig& c) -> double& { return det(c).herald_dark_cps; }));
    t.push_back(real("detectors.signal_dark_cps", [det](ScenarioConfig& c) -> double& { return det(c).signal_dark_cps; }));
    t.push_back(flag("detectors.hbt_split", [det](ScenarioConfig& c) -> bool& { return det(c).hbt_split; }));
    t.push_back(flag("detectors.emit_raw_herald", [det](ScenarioConfig& c) -> bool& { return det(c).emit_raw_herald; }));
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

void check_unit(double p, const char* key) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::config_invalid, std::string(key) + " must lie in [0, 1]");
}

void validate_scenario(const ScenarioConfig& c) {
  try {
    validate(c.source.model);
    validate(c.source.spectrum);
  } catch (const Error& e) {
    throw Error(ErrorCode::config_invalid, std::string("[source] ") + e.what());
  }
  if (!(c.source.pump1_mw > 0.0) || !(c.source.pump2_mw > 0.0))
    throw Error(ErrorCode::config_invalid, "source.pump1_mW and source.pump2_mW must be > 0");
  if (!(c.run.duration_s > 0.0)) throw Error(ErrorCode::config_invalid, "run.duration_s must be > 0");
  if (!(c.run.storage_duty > 0.0 && c.run.storage_duty <= 1.0))
    throw Error(ErrorCode::config_invalid, "run.storage_duty must lie in (0, 1]");
  validate(c.memory.afc);
  validate(c.memory.transition);
  if (c.memory.efficiency >= 0.0) check_unit(c.memory.efficiency, "memory.efficiency");
  check_unit(c.memory.polarization_factor, "memory.polarization_factor");
  if (!(c.memory.noise_rate_cps >= 0.0)) throw Error(ErrorCode::config_invalid, "memory.noise_rate_cps must be >= 0");
  if (!(c.memory.field_t >= 0.0)) throw Error(ErrorCode::config_invalid, "memory.field_T must be >= 0");
  validate(c.link.fiber);
  check_unit(c.link.interconnect_transmission, "link.interconnect_transmission");
  check_unit(c.link.collection_efficiency, "link.collection_efficiency");
  validate(c.gating.window);
  check_unit(c.gating.aom_transmission, "gating.aom_transmission");
  check_unit(c.detectors.herald_efficiency, "detectors.herald_efficiency");
  check_unit(c.detectors.signal_efficiency, "detectors.signal_efficiency");
  if (!(c.detectors.herald_dark_cps >= 0.0) || !(c.detectors.signal_dark_cps >= 0.0))
    throw Error(ErrorCode::config_invalid, "detector dark rates must be >= 0");
  if (c.gating.enabled && c.memory.enabled) {
    const auto report = validate_gating(c.gating.window, 1.0 / c.memory.afc.comb_spacing_mhz);
    if (!report.ok) throw Error(ErrorCode::config_invalid, "[gating] " + report.message());
  }
}

ScenarioConfig from_document(const ConfigDocument& doc, const std::filesystem::path& base_dir) {
  ScenarioConfig c;
  c.source.spectrum = default_source_spectrum();
  c.base_dir = base_dir;
  for (const auto& e : doc.entries) {
    const Field* f = find_field(e.key);
    if (!f) bad(e, "unknown key");
    f->read(c, e);
  }
  validate_scenario(c);
  return c;
}

}  // namespace

SpectralProfile default_source_spectrum() {
  SpectralProfile p;
  p.reference_frequency_ghz = 196038.0;
  p.features = {
      {0.0, 100.0, 0.22, LineShape::gaussian},    {-60.0, 60.0, 0.10, LineShape::gaussian},
      {65.0, 50.0, 0.05, LineShape::gaussian},    {260.0, 90.0, 0.23, LineShape::gaussian},
      {-330.0, 110.0, 0.25, LineShape::gaussian}, {-420.0, 80.0, 0.15, LineShape::gaussian},
  };
  return p;
}

ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  return from_document(parse_config(text), base_dir);
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str(), path.parent_path());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config_invalid) throw Error(e.code(), path.string() + ": " + e.what());
    throw;
  }
}

std::string serialize(const ScenarioConfig& c) {
  std::string out = "# hqnet scenario, format version 1\n";
  std::string section = "\x01";
  for (const auto& f : fields()) {
    const auto dot = f.key.rfind('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.write(c) + "\n";
  }
  return out;
}

std::string scenario_hash(const ScenarioConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ScenarioConfig with_value(const ScenarioConfig& c, const std::string& key, double value) {
  auto doc = parse_config(serialize(c));
  auto* entry = doc.find(key);
  if (!entry) throw Error(ErrorCode::config_invalid, "unknown parameter path '" + key + "'");
  if (entry->value.kind == ConfigValue::Kind::boolean) {
    entry->value.boolean = value != 0.0;
  } else if (entry->value.kind == ConfigValue::Kind::number) {
    entry->value.number = value;
    entry->value.text = key == "run.seed" ? std::to_string(static_cast<std::uint64_t>(value)) : format_number(value);
  } else {
    throw Error(ErrorCode::config_invalid, "parameter path '" + key + "' is not numeric");
  }
  return from_document(doc, c.base_dir);
}

ScenarioConfig source_characterisation(const ScenarioConfig& c) {
  ScenarioConfig out = c;
  out.name = c.name + "-source";
  out.memory.enabled = false;
  out.link.enabled = false;
  out.gating.enabled = false;
  out.memory.noise_rate_cps = 0.0;
  return out;
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  return a.name == b.name && a.source == b.source && a.memory == b.memory && a.link == b.link &&
         a.gating == b.gating && a.detectors == b.detectors && a.run == b.run;
}

}  // namespace hqnet
