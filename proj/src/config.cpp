#include "qdspin/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "qdspin/units.hpp"

namespace qdspin {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : "\n") + s;
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::pumping: return "pumping";
    case ExperimentKind::saturation: return "saturation";
    case ExperimentKind::rabi: return "rabi";
    case ExperimentKind::ramsey: return "ramsey";
    case ExperimentKind::transmission: return "transmission";
    case ExperimentKind::spectrum: return "spectrum";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  for (auto k : {ExperimentKind::pumping, ExperimentKind::saturation, ExperimentKind::rabi,
                 ExperimentKind::ramsey, ExperimentKind::transmission, ExperimentKind::spectrum})
    if (to_string(k) == text) return k;
  throw std::invalid_argument("unknown experiment kind '" + text +
                              "' (expected pumping, saturation, rabi, ramsey, transmission or spectrum)");
}

std::vector<double> Sweep::values() const {
  if (count < 1) throw std::invalid_argument("sweep: count must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out[static_cast<std::size_t>(i)] =
        log ? start * std::pow(stop / start, f) : start + f * (stop - start);
  }
  return out;
}

std::pair<double, std::string> split_quantity(const std::string& text) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  double value = 0.0;
  if (!(in >> value)) throw std::invalid_argument("'" + text + "' is not a number with a unit");
  std::string unit, rest;
  in >> unit;
  if (in >> rest) throw std::invalid_argument("'" + text + "' has trailing text");
  return {value, unit};
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

enum class Dim { none, rate, angular, ghz, thz, time, field, temperature, power, angle };

const std::map<Dim, std::map<std::string, double>>& unit_table() {
  static const std::map<Dim, std::map<std::string, double>> table = {
      {Dim::none, {{"", 1.0}}},
      {Dim::rate, {{"ns^-1", 1.0}, {"1/ns", 1.0}, {"us^-1", 1e-3}, {"1/us", 1e-3}, {"ms^-1", 1e-6}}},
      {Dim::angular,
       {{"rad/ns", 1.0},
        {"THz", units::ghz_to_angular(1e3)},
        {"GHz", units::ghz_to_angular(1.0)},
        {"MHz", units::mhz_to_angular(1.0)},
        {"kHz", units::mhz_to_angular(1e-3)}}},
      {Dim::ghz, {{"GHz", 1.0}, {"MHz", 1e-3}, {"THz", 1e3}}},
      {Dim::thz, {{"THz", 1.0}, {"GHz", 1e-3}}},
      {Dim::time, {{"ns", 1.0}, {"ps", 1e-3}, {"us", 1e3}, {"ms", 1e6}}},
      {Dim::field, {{"T", 1.0}, {"mT", 1e-3}}},
      {Dim::temperature, {{"K", 1.0}, {"mK", 1e-3}}},
      {Dim::power, {{"nW", 1.0}, {"pW", 1e-3}, {"uW", 1e3}, {"mW", 1e6}, {"W", 1e9}, {"Psat", 0.0}}},
      {Dim::angle, {{"rad", 1.0}, {"deg", std::acos(-1.0) / 180.0}}},
  };
  return table;
}

std::string expected_units(Dim d) {
  std::string out;
  for (const auto& [u, f] : unit_table().at(d)) out += (out.empty() ? "" : ", ") + (u.empty() ? "(none)" : u);
  return out;
}

class Section {
 public:
  Section(YAML::Node node, std::string path, std::vector<std::string>& errors)
      : node_(std::move(node)), path_(std::move(path)), errors_(errors) {
    if (!node_ || node_.IsNull()) return;
    if (!node_.IsMap()) {
      fail(path_, "must be a mapping", node_);
      return;
    }
    std::set<std::string> seen;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen.insert(key).second) fail(qualify(key), "duplicate key", kv.first);
    }
  }

  bool valid() const { return node_ && node_.IsMap(); }
  bool has(const std::string& key) const { return valid() && node_[key]; }

  Section child(const std::string& key, bool required) {
    used_.insert(key);
    if (!has(key)) {
      if (required) missing(key);
      return Section(YAML::Node(), qualify(key), errors_);
    }
    return Section(node_[key], qualify(key), errors_);
  }

  std::string text(const std::string& key, const std::optional<std::string>& fallback = {}) {
    used_.insert(key);
    if (!has(key)) {
      if (!fallback) missing(key);
      return fallback.value_or("");
    }
    const auto n = node_[key];
    if (!n.IsScalar()) {
      fail(qualify(key), "must be a scalar", n);
      return fallback.value_or("");
    }
    return n.as<std::string>();
  }

  double quantity(const std::string& key, Dim dim, const std::optional<double>& fallback = {},
                  double psat = 0.0) {
    used_.insert(key);
    if (!has(key)) {
      if (!fallback) missing(key);
      return fallback.value_or(0.0);
    }
    return convert(node_[key], qualify(key), dim, psat).value_or(fallback.value_or(0.0));
  }

  double number(const std::string& key, const std::optional<double>& fallback = {}) {
    return quantity(key, Dim::none, fallback);
  }

  int integer(const std::string& key, int fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    try {
      return node_[key].as<int>();
    } catch (const YAML::Exception&) {
      fail(qualify(key), "must be an integer", node_[key]);
      return fallback;
    }
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    try {
      return node_[key].as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(qualify(key), "must be a non-negative integer", node_[key]);
      return fallback;
    }
  }

  bool flag(const std::string& key, bool fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    try {
      return node_[key].as<bool>();
    } catch (const YAML::Exception&) {
      fail(qualify(key), "must be true or false", node_[key]);
      return fallback;
    }
  }

  /// A list of quantities, or a sweep mapping {start, stop, count, log} or
  /// {start, stop, step}.
  std::vector<double> series(const std::string& key, Dim dim, bool required, double psat = 0.0) {
    used_.insert(key);
    if (!has(key)) {
      if (required) missing(key);
      return {};
    }
    const auto n = node_[key];
    const std::string path = qualify(key);
    std::vector<double> out;
    if (n.IsSequence()) {
      for (std::size_t i = 0; i < n.size(); ++i)
        if (auto v = convert(n[i], path + "[" + std::to_string(i) + "]", dim, psat)) out.push_back(*v);
      return out;
    }
    Section s(n, path, errors_);
    if (!s.valid()) return {};
    Sweep sw;
    sw.start = s.quantity("start", dim, {}, psat);
    sw.stop = s.quantity("stop", dim, {}, psat);
    sw.log = s.flag("log", false);
    if (s.has("step")) {
      const double step = s.quantity("step", dim, {}, psat);
      if (!(step > 0.0) || !(sw.stop >= sw.start)) {
        fail(path, "needs step > 0 and stop >= start", n);
        return {};
      }
      sw.count = static_cast<int>(std::floor((sw.stop - sw.start) / step + 1e-9)) + 1;
      sw.stop = sw.start + step * (sw.count - 1);
    } else {
      sw.count = s.integer("count", 0);
    }
    s.finish();
    if (sw.count < 1 || (sw.log && !(sw.start > 0.0 && sw.stop > 0.0))) {
      fail(path, "invalid sweep (count >= 1; log sweeps need positive bounds)", n);
      return {};
    }
    return sw.values();
  }

  /// Reject keys nobody asked for.
  void finish() {
    if (!valid()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) fail(qualify(key), "unknown key", kv.first);
    }
  }

  void require(bool ok, const std::string& key, const std::string& message) {
    if (!ok) fail(qualify(key), message, has(key) ? node_[key] : node_);
  }

  const std::string& path() const { return path_; }

 private:
  std::optional<double> convert(const YAML::Node& n, const std::string& path, Dim dim, double psat) {
    if (!n.IsScalar()) {
      fail(path, "must be a scalar quantity", n);
      return std::nullopt;
    }
    const auto text = n.as<std::string>();
    try {
      auto [value, unit] = split_quantity(text);
      const auto& table = unit_table().at(dim);
      const auto it = table.find(unit);
      if (it == table.end()) {
        fail(path, fmt::format("unit '{}' does not match (expected {})", unit, expected_units(dim)), n);
        return std::nullopt;
      }
      if (dim == Dim::power && unit == "Psat") return value * psat;
      return value * it->second;
    } catch (const std::invalid_argument& e) {
      fail(path, e.what(), n);
      return std::nullopt;
    }
  }

  void missing(const std::string& key) {
    fail(qualify(key), "missing required key", node_ ? node_ : YAML::Node());
  }

  void fail(const std::string& path, const std::string& message, const YAML::Node& at) {
    const auto mark = at ? at.Mark() : YAML::Mark::null_mark();
    if (mark.is_null())
      errors_.push_back(fmt::format("{}: {}", path, message));
    else
      errors_.push_back(fmt::format("{} (line {}): {}", path, mark.line + 1, message));
  }

  std::string qualify(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

void read_system(Section s, ScenarioConfig& cfg, std::vector<std::string>& errors) {
  ChargeSpecies species = ChargeSpecies::XM;
  try {
    species = parse_species(s.text("species"));
  } catch (const ModelError& e) {
    s.require(false, "species", e.what());
  }
  const double nu0 = s.quantity("nu0", Dim::thz);

  FieldEnvironment env;
  env.field_tesla = s.quantity("field", Dim::field, 0.0);
  env.angle_rad = s.quantity("angle", Dim::angle, 0.0);
  env.temperature_kelvin = s.quantity("temperature", Dim::temperature, 4.0);
  env.g_ground = s.number("g_ground", 0.0);
  s.require(env.temperature_kelvin > 0.0, "temperature", "must be > 0 K");
  s.require(env.field_tesla >= 0.0, "field", "must be >= 0 T");

  double delta_g = s.has("delta_g") ? s.quantity("delta_g", Dim::angular) : env.ground_splitting();
  const double g_excited = s.number("g_excited", 0.0);
  double delta_e = s.has("delta_e")
                       ? s.quantity("delta_e", Dim::angular)
                       : std::abs(g_excited) * units::ghz_to_angular(units::bohr_ghz_per_tesla) * env.field_tesla;
  s.require(delta_g >= 0.0, "delta_g", "must be >= 0");
  s.require(delta_e >= 0.0, "delta_e", "must be >= 0");

  DecayRates rates;
  if (s.has("gx_wg")) {
    rates.gx_wg = s.quantity("gx_wg", Dim::rate);
    rates.gx_rad = s.quantity("gx_rad", Dim::rate);
    rates.gy_wg = s.quantity("gy_wg", Dim::rate);
    rates.gy_rad = s.quantity("gy_rad", Dim::rate);
    for (const char* k : {"gx_wg", "gx_rad", "gy_wg", "gy_rad"})
      s.require(s.quantity(k, Dim::rate) >= 0.0, k, "must be >= 0");
  } else {
    const double g0 = s.quantity("gamma_0", Dim::rate);
    const double gx = s.quantity("gamma_x", Dim::rate);
    const double a = s.number("asymmetry");
    s.require(g0 > 0.0, "gamma_0", "must be > 0");
    s.require(gx >= 0.0, "gamma_x", "must be >= 0");
    s.require(gx < g0, "gamma_x", "must be below gamma_0");
    s.require(a > 1.0, "asymmetry", "must be > 1");
    if (g0 > 0.0 && gx >= 0.0 && gx < g0 && a > 1.0) {
      try {
        rates = DecayRates::from_measured(g0, gx, a);
      } catch (const ModelError& e) {
        s.require(false, "asymmetry", e.what());
      }
    }
  }
  rates.dephasing = s.quantity("dephasing", Dim::rate, 0.0);
  rates.cotunneling = s.quantity("cotunneling", Dim::rate, 0.0);
  s.require(rates.dephasing >= 0.0, "dephasing", "must be >= 0");
  s.require(rates.cotunneling >= 0.0, "cotunneling", "must be >= 0");
  cfg.p_sat = s.quantity("p_sat", Dim::power, 1.0);
  s.require(cfg.p_sat > 0.0, "p_sat", "must be > 0");
  s.finish();

  if (delta_g >= 0.0 && delta_e >= 0.0)
    cfg.system = SystemModel{LevelScheme(species, nu0, delta_g, delta_e), rates, env};
  (void)errors;
}

NoiseAveraging parse_averaging(Section& s, const std::string& key, NoiseAveraging fallback) {
  const auto text = s.text(key, fallback == NoiseAveraging::quadrature ? "quadrature" : "monte_carlo");
  if (text == "quadrature") return NoiseAveraging::quadrature;
  if (text == "monte_carlo") return NoiseAveraging::monte_carlo;
  s.require(false, key, "must be quadrature or monte_carlo");
  return fallback;
}

void read_noise(Section s, ScenarioConfig& cfg) {
  auto& n = cfg.noise;
  n.diffusion.sigma = s.quantity("sigma", Dim::angular, 0.0);
  s.require(n.diffusion.sigma >= 0.0, "sigma", "must be >= 0");
  if (s.has("t2_star")) {
    const double t2 = s.quantity("t2_star", Dim::time);
    s.require(t2 > 0.0, "t2_star", "must be > 0");
    n.spin.sigma_spin = t2 > 0.0 ? sigma_from_t2_star(t2) : 0.0;
  } else {
    n.spin.sigma_spin = s.quantity("sigma_spin", Dim::angular, 0.0);
    s.require(n.spin.sigma_spin >= 0.0, "sigma_spin", "must be >= 0");
  }
  n.optical_averaging = parse_averaging(s, "optical_averaging", NoiseAveraging::quadrature);
  n.spin_averaging = parse_averaging(s, "spin_averaging", NoiseAveraging::monte_carlo);
  n.nodes = s.integer("nodes", kDefaultQuadratureNodes);
  s.require(n.nodes >= 1, "nodes", "must be >= 1");
  n.optical_shots = static_cast<std::size_t>(s.unsigned_integer("optical_shots", 1000));
  n.spin_shots = static_cast<std::size_t>(s.unsigned_integer("spin_shots", 2000));
  cfg.seed = s.unsigned_integer("seed", 0);
  s.finish();
}

void read_timings(Section s, PumpingTimings& t) {
  t.photocreation = s.quantity("photocreation", Dim::time, t.photocreation);
  t.pump = s.quantity("pump", Dim::time, t.pump);
  t.probe = s.quantity("probe", Dim::time, t.probe);
  t.gap = s.quantity("gap", Dim::time, t.gap);
  t.rise = s.quantity("rise", Dim::time, t.rise);
  for (const char* k : {"photocreation", "pump", "probe"}) s.require(s.quantity(k, Dim::time, 1.0) > 0.0, k, "must be > 0");
  s.require(t.rise >= 0.0, "rise", "must be >= 0");
  s.finish();
}

void read_pumping(Section& s, ScenarioConfig& cfg, bool sweep) {
  auto& p = cfg.pumping;
  p.pump_power = s.quantity("pump_power", Dim::power, {}, cfg.p_sat);
  s.require(p.pump_power >= 0.0, "pump_power", "must be >= 0");
  if (sweep) {
    p.probe_powers = s.series("probe_powers", Dim::power, true, cfg.p_sat);
    s.require(p.probe_powers.size() >= 3, "probe_powers", "needs at least 3 powers");
    for (double v : p.probe_powers) s.require(v > 0.0, "probe_powers", "must all be > 0");
    p.refit_without_sigma = s.flag("refit_without_sigma", true);
  } else {
    p.probe_power = s.quantity("probe_power", Dim::power, {}, cfg.p_sat);
    s.require(p.probe_power >= 0.0, "probe_power", "must be >= 0");
  }
  read_timings(s.child("timings", false), p.timings);
  p.photocreation_efficiency = s.number("photocreation_efficiency", 1.0);
  s.require(p.photocreation_efficiency >= 0.0 && p.photocreation_efficiency <= 1.0,
            "photocreation_efficiency", "must be in [0, 1]");
  p.bin_width = s.quantity("bin_width", Dim::time, 0.5);
  s.require(p.bin_width > 0.0, "bin_width", "must be > 0");
  p.fit_start = s.quantity("fit_start", Dim::time, 2.0);
  p.background = s.quantity("background", Dim::rate, 0.0);
  s.require(p.background >= 0.0, "background", "must be >= 0");
  p.counts_per_unit = s.number("counts_per_unit", 0.0);
  s.require(p.counts_per_unit >= 0.0, "counts_per_unit", "must be >= 0");
}

void read_raman(Section& s, ScenarioConfig& cfg, bool ramsey) {
  auto& r = cfg.raman;
  if (ramsey) {
    r.power = s.quantity("power", Dim::power, {}, cfg.p_sat);
    r.detunings = {s.quantity("detuning", Dim::angular)};
    r.taus = s.series("taus", Dim::time, true);
    s.require(r.taus.size() >= 4, "taus", "needs at least 4 delays");
    for (double t : r.taus) s.require(t >= 0.0, "taus", "must all be >= 0");
  } else {
    r.detunings = s.series("detunings", Dim::angular, true);
    r.powers = s.series("powers", Dim::power, true, cfg.p_sat);
    r.duration = s.quantity("duration", Dim::time, 20.0);
    s.require(r.duration > 0.0, "duration", "must be > 0");
  }
  for (double d : r.detunings) s.require(d > 0.0, ramsey ? "detuning" : "detunings", "must be > 0");
  r.modulation = s.quantity("modulation", Dim::angular, cfg.system.scheme.delta_g());
  {
    Section c = s.child("calibration", true);
    r.omega_max = c.quantity("omega_max", Dim::angular);
    r.calibration_power = c.quantity("power", Dim::power, {}, cfg.p_sat);
    r.calibration_detuning = c.quantity("detuning", Dim::angular);
    c.require(r.omega_max > 0.0, "omega_max", "must be > 0");
    c.require(r.calibration_power > 0.0, "power", "must be > 0");
    c.require(r.calibration_detuning > 0.0, "detuning", "must be > 0");
    c.finish();
  }
  {
    Section t = s.child("timings", false);
    auto& tm = r.timings;
    tm.photocreation = t.flag("photocreation", cfg.system.scheme.species() == ChargeSpecies::XP);
    tm.photocreation_efficiency = t.number("photocreation_efficiency", 1.0);
    tm.init = t.quantity("init", Dim::time, tm.init);
    tm.init_power = t.quantity("init_power", Dim::power, tm.init_power * cfg.p_sat, cfg.p_sat) / cfg.p_sat;
    tm.readout = t.quantity("readout", Dim::time, tm.readout);
    tm.readout_power = t.quantity("readout_power", Dim::power, tm.readout_power * cfg.p_sat, cfg.p_sat) / cfg.p_sat;
    const auto target = t.text("readout_transition", "y2");
    if (target == "y1" || target == "y2")
      tm.readout_transition = target == "y1" ? TransitionId::y1 : TransitionId::y2;
    else
      t.require(false, "readout_transition", "must be y1 or y2");
    tm.gap = t.quantity("gap", Dim::time, tm.gap);
    tm.rise = t.quantity("rise", Dim::time, tm.rise);
    tm.raman_rise = t.quantity("raman_rise", Dim::time, tm.raman_rise);
    t.require(tm.gap >= 20.0 * tm.rise, "gap", "must be at least 20 rise times");
    t.finish();
  }
}

void read_spectrum(Section& s, ScenarioConfig& cfg, bool transmission) {
  auto& sp = cfg.spectrum;
  sp.grid = s.series("grid", Dim::ghz, true);
  s.require(sp.grid.size() >= 3, "grid", "needs at least 3 points");
  sp.reference = s.quantity("reference", Dim::ghz, 0.0);
  const std::string key = transmission ? "populations" : "excited_populations";
  if (s.has(key)) {
    auto values = s.series(key, Dim::none, false);
    if (values.size() == 2 && values[0] >= 0.0 && values[1] >= 0.0 &&
        std::abs(values[0] + values[1] - 1.0) < 1e-9) {
      sp.populations = Eigen::Vector2d(values[0], values[1]);
      sp.thermal = false;
    } else {
      s.require(false, key, "must be two non-negative numbers summing to 1");
    }
  } else {
    sp.thermal = transmission;
  }
  if (!transmission) {
    sp.instrument_fwhm = s.quantity("instrument_fwhm", Dim::ghz, 0.0);
    s.require(sp.instrument_fwhm >= 0.0, "instrument_fwhm", "must be >= 0");
    Section sc = s.child("scanner", false);
    if (sc.valid()) {
      sp.fsr = sc.quantity("fsr", Dim::ghz);
      sp.scanner_linewidth = sc.quantity("linewidth", Dim::ghz);
      sc.require(sp.fsr > sp.scanner_linewidth && sp.scanner_linewidth > 0.0, "fsr",
                 "needs fsr > linewidth > 0");
      sc.finish();
    }
    sp.counts_per_unit = s.number("counts_per_unit", 0.0);
    s.require(sp.counts_per_unit >= 0.0, "counts_per_unit", "must be >= 0");
  }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& name) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError({fmt::format("{}: parse error (line {}): {}", name, e.mark.line + 1, e.msg)});
  }
  std::vector<std::string> errors;
  ScenarioConfig cfg;
  cfg.name = name;
  cfg.source = text;
  Section top(root, "", errors);
  if (!top.valid()) {
    if (errors.empty()) errors.push_back(name + ": configuration must be a mapping");
    throw ConfigError(errors);
  }
  read_system(top.child("system", true), cfg, errors);
  read_noise(top.child("noise", false), cfg);

  Section ex = top.child("experiment", true);
  if (ex.valid()) {
    try {
      cfg.kind = parse_experiment_kind(ex.text("kind"));
      switch (cfg.kind) {
        case ExperimentKind::pumping: read_pumping(ex, cfg, false); break;
        case ExperimentKind::saturation: read_pumping(ex, cfg, true); break;
        case ExperimentKind::rabi: read_raman(ex, cfg, false); break;
        case ExperimentKind::ramsey: read_raman(ex, cfg, true); break;
        case ExperimentKind::transmission: read_spectrum(ex, cfg, true); break;
        case ExperimentKind::spectrum: read_spectrum(ex, cfg, false); break;
      }
      ex.finish();
    } catch (const std::invalid_argument& e) {
      ex.require(false, "kind", e.what());
    }
  }
  Section out = top.child("output", false);
  cfg.output_dir = out.text("dir", "");
  cfg.output_format = out.text("format", "csv");
  out.require(cfg.output_format == "csv" || cfg.output_format == "json", "format", "must be csv or json");
  out.finish();
  top.finish();

  if (!errors.empty()) {
    for (auto& e : errors) e = name + ": " + e;
    throw ConfigError(errors);
  }
  cfg.noise.diffusion.seed = cfg.seed;
  cfg.noise.spin.seed = cfg.seed;
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path + ": cannot open file"});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace qdspin
