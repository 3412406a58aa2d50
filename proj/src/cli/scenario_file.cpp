#include "ringsim/cli/scenario_file.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "ringsim/core/error.hpp"

namespace ringsim {

namespace {

enum class Dim { none, length, current, time, temperature, field, gradient, angle, speed, acceleration, mass };

std::string_view dim_name(Dim d) {
  switch (d) {
    case Dim::none: return "dimensionless";
    case Dim::length: return "length (m, mm, um)";
    case Dim::current: return "current (A)";
    case Dim::time: return "time (s, ms)";
    case Dim::temperature: return "temperature (K, uK)";
    case Dim::field: return "field (T, G)";
    case Dim::gradient: return "gradient (G/cm)";
    case Dim::angle: return "angle (rad)";
    case Dim::speed: return "speed (m/s)";
    case Dim::acceleration: return "acceleration (m/s^2)";
    case Dim::mass: return "mass (kg)";
  }
  return "?";
}

struct Unit {
  Dim dim;
  double scale;
};

const std::map<std::string, Unit, std::less<>>& units() {
  static const std::map<std::string, Unit, std::less<>> u{
      {"A", {Dim::current, 1.0}},       {"m", {Dim::length, 1.0}},           {"mm", {Dim::length, 1e-3}},
      {"um", {Dim::length, 1e-6}},      {"\xC2\xB5m", {Dim::length, 1e-6}},  {"s", {Dim::time, 1.0}},
      {"ms", {Dim::time, 1e-3}},        {"K", {Dim::temperature, 1.0}},      {"uK", {Dim::temperature, 1e-6}},
      {"\xC2\xB5K", {Dim::temperature, 1e-6}}, {"T", {Dim::field, 1.0}},     {"G", {Dim::field, 1e-4}},
      {"G/cm", {Dim::gradient, 1e-2}},  {"rad", {Dim::angle, 1.0}},          {"m/s", {Dim::speed, 1.0}},
      {"m/s^2", {Dim::acceleration, 1.0}}, {"kg", {Dim::mass, 1.0}},
  };
  return u;
}

std::string si_unit(Dim d) {
  switch (d) {
    case Dim::none: return "";
    case Dim::length: return "m";
    case Dim::current: return "A";
    case Dim::time: return "s";
    case Dim::temperature: return "K";
    case Dim::field: return "T";
    case Dim::gradient: return "G/cm";
    case Dim::angle: return "rad";
    case Dim::speed: return "m/s";
    case Dim::acceleration: return "m/s^2";
    case Dim::mass: return "kg";
  }
  return "";
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

// Mutable staging area: PhysicalConstants is immutable, so its inputs are
// collected first.
struct Builder {
  ScenarioConfig cfg;
  double mass = codata::mass_rb87;
  double gF = -0.5;
  double mF = -1.0;
  double g_grav = codata::g_standard;
  std::optional<double> moment_bohr;
};

struct Context {
  int line;
  std::string key;
  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorCategory::parse, "line " + std::to_string(line) + ": " + key + ": " + msg);
  }
};

double parse_number(const std::string& t, const Context& cx) {
  double v = 0.0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(v)) cx.error("not a number: '" + t + "'");
  return v;
}

// `value [unit]`, or a list of values followed by one unit.
std::vector<double> parse_values(const std::string& text, Dim dim, bool list, const Context& cx) {
  auto tk = tokens(text);
  if (tk.empty()) cx.error("missing value");
  double scale = 1.0;
  if (dim == Dim::none) {
    if (units().count(tk.back())) cx.error("unit '" + tk.back() + "' not allowed for a dimensionless value");
  } else {
    const auto it = units().find(tk.back());
    if (it == units().end()) {
      double v;
      const auto& last = tk.back();
      const auto r = std::from_chars(last.data(), last.data() + last.size(), v);
      if (r.ec == std::errc() && r.ptr == last.data() + last.size()) {
        cx.error("missing unit; expected " + std::string(dim_name(dim)));
      }
      cx.error("unknown unit '" + tk.back() + "'; expected " + std::string(dim_name(dim)));
    }
    if (it->second.dim != dim) {
      cx.error("unit '" + tk.back() + "' not allowed; expected " + std::string(dim_name(dim)));
    }
    scale = it->second.scale;
    tk.pop_back();
  }
  if (tk.empty()) cx.error("missing value");
  if (!list && tk.size() != 1) cx.error("expected a single value");
  std::vector<double> out;
  for (const auto& t : tk) out.push_back(parse_number(t, cx) * scale);
  return out;
}

bool parse_bool(const std::string& text, const Context& cx) {
  const std::string t = trim(text);
  if (t == "true" || t == "on" || t == "yes") return true;
  if (t == "false" || t == "off" || t == "no") return false;
  cx.error("expected true/false, got '" + t + "'");
}

std::uint64_t parse_uint(const std::string& text, const Context& cx) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) cx.error("expected a non-negative integer, got '" + t + "'");
  return v;
}

struct Key {
  std::function<void(Builder&, const std::string&, const Context&)> set;
};

using Table = std::map<std::string, Key, std::less<>>;

Key quantity(Dim dim, std::function<double&(Builder&)> ref) {
  return {[dim, ref](Builder& b, const std::string& v, const Context& cx) {
    ref(b) = parse_values(v, dim, false, cx).front();
  }};
}

Key list(Dim dim, std::function<std::vector<double>&(Builder&)> ref) {
  return {[dim, ref](Builder& b, const std::string& v, const Context& cx) {
    ref(b) = trim(v) == "none" ? std::vector<double>{} : parse_values(v, dim, true, cx);
  }};
}

Key flag(std::function<bool&(Builder&)> ref) {
  return {[ref](Builder& b, const std::string& v, const Context& cx) { ref(b) = parse_bool(v, cx); }};
}

template <class E>
Key choice(std::vector<std::pair<std::string, E>> options, std::function<E&(Builder&)> ref) {
  return {[options, ref](Builder& b, const std::string& v, const Context& cx) {
    const std::string t = trim(v);
    for (const auto& [name, e] : options) {
      if (name == t) {
        ref(b) = e;
        return;
      }
    }
    std::string allowed;
    for (const auto& o : options) allowed += (allowed.empty() ? "" : ", ") + o.first;
    cx.error("expected one of {" + allowed + "}, got '" + t + "'");
  }};
}

Taper& taper(Builder& b) {
  if (!b.cfg.guide.taper) b.cfg.guide.taper = Taper{};
  return *b.cfg.guide.taper;
}

JunctionModel& junction(Builder& b) {
  if (!b.cfg.ring.junction) b.cfg.ring.junction = JunctionModel{};
  return *b.cfg.ring.junction;
}

MultiLoadConfig& multiload(Builder& b) {
  if (!b.cfg.multiload) b.cfg.multiload = MultiLoadConfig{};
  return *b.cfg.multiload;
}

ShapingPulse& pulse(Builder& b) { return b.cfg.shaping.back(); }

const std::map<std::string, Table, std::less<>>& schema() {
  static const std::map<std::string, Table, std::less<>> s = [] {
    std::map<std::string, Table, std::less<>> m;
    m[""] = {{"seed", {[](Builder& b, const std::string& v, const Context& cx) { b.cfg.seed = parse_uint(v, cx); }}}};
    m["constants"] = {
        {"mass", quantity(Dim::mass, [](Builder& b) -> double& { return b.mass; })},
        {"gF", quantity(Dim::none, [](Builder& b) -> double& { return b.gF; })},
        {"mF", quantity(Dim::none, [](Builder& b) -> double& { return b.mF; })},
        {"g_grav", quantity(Dim::acceleration, [](Builder& b) -> double& { return b.g_grav; })},
        {"moment_bohr", {[](Builder& b, const std::string& v, const Context& cx) {
           b.moment_bohr = parse_values(v, Dim::none, false, cx).front();
         }}},
        {"gravity", flag([](Builder& b) -> bool& { return b.cfg.gravity; })},
    };
    m["guide"] = {
        {"separation", quantity(Dim::length, [](Builder& b) -> double& { return b.cfg.guide.separation; })},
        {"current", quantity(Dim::current, [](Builder& b) -> double& { return b.cfg.guide.current; })},
        {"taper", {[](Builder& b, const std::string& v, const Context& cx) {
           if (parse_bool(v, cx)) taper(b);
           else b.cfg.guide.taper.reset();
         }}},
        {"taper_far_separation", quantity(Dim::length, [](Builder& b) -> double& { return taper(b).far_separation; })},
        {"taper_length", quantity(Dim::length, [](Builder& b) -> double& { return taper(b).length; })},
    };
    m["ring"] = {
        {"radius", quantity(Dim::length, [](Builder& b) -> double& { return b.cfg.ring.radius; })},
        {"separation", quantity(Dim::length, [](Builder& b) -> double& { return b.cfg.ring.separation; })},
        {"current", quantity(Dim::current, [](Builder& b) -> double& { return b.cfg.ring.current; })},
        {"junction", {[](Builder& b, const std::string& v, const Context& cx) {
           if (parse_bool(v, cx)) junction(b);
           else b.cfg.ring.junction.reset();
         }}},
        {"junction_ripple", quantity(Dim::none, [](Builder& b) -> double& { return junction(b).ripple; })},
        {"junction_extent", quantity(Dim::length, [](Builder& b) -> double& { return junction(b).extent; })},
        {"junction_azimuth", quantity(Dim::angle, [](Builder& b) -> double& { return junction(b).azimuth; })},
        {"overlap_offset", quantity(Dim::length, [](Builder& b) -> double& { return b.cfg.overlap_offset; })},
        {"escape_factor", quantity(Dim::none, [](Builder& b) -> double& { return b.cfg.escape_factor; })},
    };
    m["ramps"] = {
        {"transfer_time", quantity(Dim::time, [](Builder& b) -> double& { return b.cfg.transfer_time; })},
        {"t_end", quantity(Dim::time, [](Builder& b) -> double& { return b.cfg.t_end; })},
    };
    m["cloud"] = {
        {"atoms", {[](Builder& b, const std::string& v, const Context& cx) { b.cfg.cloud.atoms = parse_uint(v, cx); }}},
        {"placement", choice<CloudPlacement>({{"guide", CloudPlacement::guide}, {"ring", CloudPlacement::ring}},
                                             [](Builder& b) -> CloudPlacement& { return b.cfg.cloud.placement; })},
        {"height", quantity(Dim::length, [](Builder& b) -> double& { return b.cfg.cloud.height; })},
        {"azimuth", quantity(Dim::angle, [](Builder& b) -> double& { return b.cfg.cloud.azimuth; })},
        {"sigma_long", quantity(Dim::length, [](Builder& b) -> double& { return b.cfg.cloud.sigma_long; })},
        {"sigma_trans", quantity(Dim::length, [](Builder& b) -> double& { return b.cfg.cloud.sigma_trans; })},
        {"T_long", quantity(Dim::temperature, [](Builder& b) -> double& { return b.cfg.cloud.T_long; })},
        {"T_trans", quantity(Dim::temperature, [](Builder& b) -> double& { return b.cfg.cloud.T_trans; })},
        {"mean_speed", quantity(Dim::speed, [](Builder& b) -> double& { return b.cfg.cloud.mean_speed; })},
    };
    m["losses"] = {
        {"tau_background", quantity(Dim::time, [](Builder& b) -> double& { return b.cfg.losses.tau_background; })},
        {"majorana", choice<MajoranaModel>({{"off", MajoranaModel::off},
                                            {"loss_disk", MajoranaModel::loss_disk},
                                            {"spin_oracle", MajoranaModel::spin_oracle}},
                                           [](Builder& b) -> MajoranaModel& { return b.cfg.losses.majorana; })},
        {"loss_radius", quantity(Dim::length, [](Builder& b) -> double& { return b.cfg.losses.loss_radius; })},
        {"junction", flag([](Builder& b) -> bool& { return b.cfg.losses.junction; })},
        {"reload_removal_fraction",
         quantity(Dim::none, [](Builder& b) -> double& { return b.cfg.losses.reload_removal_fraction; })},
    };
    m["probe"] = {
        {"azimuth", quantity(Dim::angle, [](Builder& b) -> double& { return b.cfg.probe.azimuth; })},
        {"window", quantity(Dim::length, [](Builder& b) -> double& { return b.cfg.probe.window; })},
        {"duration", quantity(Dim::time, [](Builder& b) -> double& { return b.cfg.probe.duration; })},
        {"delays", list(Dim::time, [](Builder& b) -> std::vector<double>& { return b.cfg.probe.delays; })},
        {"destructive", flag([](Builder& b) -> bool& { return b.cfg.probe.destructive; })},
        {"reference", {[](Builder& b, const std::string& v, const Context& cx) {
           if (trim(v) == "auto") {
             b.cfg.probe.auto_reference = true;
             b.cfg.probe.reference = 0.0;
           } else {
             b.cfg.probe.auto_reference = false;
             b.cfg.probe.reference = parse_values(v, Dim::time, false, cx).front();
           }
         }}},
    };
    m["shaping"] = {
        {"t", quantity(Dim::time, [](Builder& b) -> double& { return pulse(b).t; })},
        {"fraction", quantity(Dim::none, [](Builder& b) -> double& { return pulse(b).fraction; })},
        {"mode", choice<ShapeMode>({{"keep", ShapeMode::keep}, {"remove", ShapeMode::remove}},
                                   [](Builder& b) -> ShapeMode& { return pulse(b).mode; })},
    };
    m["multiload"] = {
        {"reload_delay", quantity(Dim::time, [](Builder& b) -> double& { return multiload(b).reload_delay; })},
        {"guide_ramp_on", quantity(Dim::time, [](Builder& b) -> double& { return multiload(b).guide_ramp_on; })},
        {"dip_current", quantity(Dim::current, [](Builder& b) -> double& { return multiload(b).reload.dip_current; })},
        {"ramp_down", quantity(Dim::time, [](Builder& b) -> double& { return multiload(b).reload.ramp_down; })},
        {"plateau", quantity(Dim::time, [](Builder& b) -> double& { return multiload(b).reload.plateau; })},
    };
    m["integrator"] = {
        {"dt", quantity(Dim::time, [](Builder& b) -> double& { return b.cfg.integrator.dt; })},
        {"max_steps", {[](Builder& b, const std::string& v, const Context& cx) {
           b.cfg.integrator.max_steps = static_cast<long>(parse_uint(v, cx));
         }}},
        {"energy_drift_tolerance",
         quantity(Dim::none, [](Builder& b) -> double& { return b.cfg.integrator.energy_drift_tolerance; })},
        {"spin_substeps", {[](Builder& b, const std::string& v, const Context& cx) {
           b.cfg.integrator.spin_substeps = static_cast<int>(parse_uint(v, cx));
         }}},
        {"refine_eta", quantity(Dim::none, [](Builder& b) -> double& { return b.cfg.integrator.refine_eta; })},
        {"max_refine", {[](Builder& b, const std::string& v, const Context& cx) {
           b.cfg.integrator.max_refine = static_cast<int>(parse_uint(v, cx));
         }}},
        {"field_regularization",
         quantity(Dim::field, [](Builder& b) -> double& { return b.cfg.integrator.field_regularization; })},
        {"sample_stride", {[](Builder& b, const std::string& v, const Context& cx) {
           b.cfg.integrator.sample_stride = static_cast<int>(parse_uint(v, cx));
         }}},
    };
    m["output"] = {
        {"snapshots", list(Dim::time, [](Builder& b) -> std::vector<double>& { return b.cfg.snapshots; })},
        {"workers", {[](Builder& b, const std::string& v, const Context& cx) {
           b.cfg.workers = static_cast<int>(parse_uint(v, cx));
         }}},
    };
    return m;
  }();
  return s;
}

}  // namespace

ScenarioConfig parse_scenario_text(std::string_view text, std::optional<std::uint64_t> seed_override) {
  Builder b;
  std::string section;
  std::istringstream is{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string l = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (l.empty()) continue;
    if (l.front() == '[') {
      if (l.back() != ']') fail(ErrorCategory::parse, "line " + std::to_string(line) + ": malformed section header");
      section = trim(l.substr(1, l.size() - 2));
      if (!schema().count(section) || section.empty()) {
        fail(ErrorCategory::parse, "line " + std::to_string(line) + ": unknown section [" + section + "]");
      }
      if (section == "shaping") b.cfg.shaping.emplace_back();
      if (section == "multiload") multiload(b);
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string::npos) fail(ErrorCategory::parse, "line " + std::to_string(line) + ": expected key = value");
    const std::string key = trim(l.substr(0, eq));
    const std::string value = trim(l.substr(eq + 1));
    const Context cx{line, section.empty() ? key : section + "." + key};
    const Table& table = schema().at(section);
    const auto it = table.find(key);
    if (it == table.end()) cx.error("unknown key");
    it->second.set(b, value, cx);
  }
  if (seed_override) b.cfg.seed = *seed_override;
  if (!b.cfg.seed) fail(ErrorCategory::parse, "seed required");

  try {
    PhysicalConstants c(b.mass, b.gF, b.mF, b.g_grav);
    if (b.moment_bohr) c = c.with_moment(*b.moment_bohr * codata::muB);
    b.cfg.constants = c;
    b.cfg.validate();
  } catch (const Error& e) {
    fail(ErrorCategory::parse, std::string("invalid scenario: ") + e.what());
  }
  return b.cfg;
}

ScenarioConfig parse_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot read scenario file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(), seed_override);
}

namespace {

void put(std::ostringstream& os, const std::string& key, double v, Dim d) {
  os << key << " = " << num(v);
  if (d != Dim::none) os << ' ' << si_unit(d);
  os << '\n';
}

void put_list(std::ostringstream& os, const std::string& key, const std::vector<double>& v, Dim d) {
  os << key << " =";
  if (v.empty()) {
    os << " none\n";
    return;
  }
  for (double x : v) os << ' ' << num(x);
  os << ' ' << si_unit(d) << '\n';
}

const char* on_off(bool b) { return b ? "on" : "off"; }

}  // namespace

std::string write_scenario(const ScenarioConfig& c) {
  std::ostringstream os;
  if (c.seed) os << "seed = " << *c.seed << "\n";

  const PhysicalConstants& k = c.constants;
  os << "\n[constants]\n";
  put(os, "mass", k.mass(), Dim::mass);
  put(os, "gF", k.gF(), Dim::none);
  put(os, "mF", k.mF(), Dim::none);
  put(os, "g_grav", k.g_grav(), Dim::acceleration);
  if (k.mu_m() != std::abs(k.gF() * k.mF()) * codata::muB) put(os, "moment_bohr", k.mu_m() / codata::muB, Dim::none);
  os << "gravity = " << on_off(c.gravity) << '\n';

  os << "\n[guide]\n";
  put(os, "separation", c.guide.separation, Dim::length);
  put(os, "current", c.guide.current, Dim::current);
  os << "taper = " << on_off(c.guide.taper.has_value()) << '\n';
  if (c.guide.taper) {
    put(os, "taper_far_separation", c.guide.taper->far_separation, Dim::length);
    put(os, "taper_length", c.guide.taper->length, Dim::length);
  }

  os << "\n[ring]\n";
  put(os, "radius", c.ring.radius, Dim::length);
  put(os, "separation", c.ring.separation, Dim::length);
  put(os, "current", c.ring.current, Dim::current);
  os << "junction = " << on_off(c.ring.junction.has_value()) << '\n';
  if (c.ring.junction) {
    put(os, "junction_ripple", c.ring.junction->ripple, Dim::none);
    put(os, "junction_extent", c.ring.junction->extent, Dim::length);
    put(os, "junction_azimuth", c.ring.junction->azimuth, Dim::angle);
  }
  put(os, "overlap_offset", c.overlap_offset, Dim::length);
  put(os, "escape_factor", c.escape_factor, Dim::none);

  os << "\n[ramps]\n";
  put(os, "transfer_time", c.transfer_time, Dim::time);
  put(os, "t_end", c.t_end, Dim::time);

  os << "\n[cloud]\n";
  os << "atoms = " << c.cloud.atoms << '\n';
  os << "placement = " << (c.cloud.placement == CloudPlacement::guide ? "guide" : "ring") << '\n';
  put(os, "height", c.cloud.height, Dim::length);
  put(os, "azimuth", c.cloud.azimuth, Dim::angle);
  put(os, "sigma_long", c.cloud.sigma_long, Dim::length);
  put(os, "sigma_trans", c.cloud.sigma_trans, Dim::length);
  put(os, "T_long", c.cloud.T_long, Dim::temperature);
  put(os, "T_trans", c.cloud.T_trans, Dim::temperature);
  put(os, "mean_speed", c.cloud.mean_speed, Dim::speed);

  os << "\n[losses]\n";
  put(os, "tau_background", c.losses.tau_background, Dim::time);
  os << "majorana = "
     << (c.losses.majorana == MajoranaModel::off         ? "off"
         : c.losses.majorana == MajoranaModel::loss_disk ? "loss_disk"
                                                         : "spin_oracle")
     << '\n';
  put(os, "loss_radius", c.losses.loss_radius, Dim::length);
  os << "junction = " << on_off(c.losses.junction) << '\n';
  put(os, "reload_removal_fraction", c.losses.reload_removal_fraction, Dim::none);

  os << "\n[probe]\n";
  put(os, "azimuth", c.probe.azimuth, Dim::angle);
  put(os, "window", c.probe.window, Dim::length);
  put(os, "duration", c.probe.duration, Dim::time);
  put_list(os, "delays", c.probe.delays, Dim::time);
  os << "destructive = " << on_off(c.probe.destructive) << '\n';
  if (c.probe.auto_reference) os << "reference = auto\n";
  else put(os, "reference", c.probe.reference, Dim::time);

  for (const auto& p : c.shaping) {
    os << "\n[shaping]\n";
    put(os, "t", p.t, Dim::time);
    put(os, "fraction", p.fraction, Dim::none);
    os << "mode = " << (p.mode == ShapeMode::keep ? "keep" : "remove") << '\n';
  }

  if (c.multiload) {
    const auto& m = *c.multiload;
    os << "\n[multiload]\n";
    put(os, "reload_delay", m.reload_delay, Dim::time);
    put(os, "guide_ramp_on", m.guide_ramp_on, Dim::time);
    put(os, "dip_current", m.reload.dip_current, Dim::current);
    put(os, "ramp_down", m.reload.ramp_down, Dim::time);
    put(os, "plateau", m.reload.plateau, Dim::time);
  }

  const IntegratorConfig& ic = c.integrator;
  os << "\n[integrator]\n";
  put(os, "dt", ic.dt, Dim::time);
  os << "max_steps = " << ic.max_steps << '\n';
  put(os, "energy_drift_tolerance", ic.energy_drift_tolerance, Dim::none);
  os << "spin_substeps = " << ic.spin_substeps << '\n';
  put(os, "refine_eta", ic.refine_eta, Dim::none);
  os << "max_refine = " << ic.max_refine << '\n';
  put(os, "field_regularization", ic.field_regularization, Dim::field);
  os << "sample_stride = " << ic.sample_stride << '\n';

  os << "\n[output]\n";
  put_list(os, "snapshots", c.snapshots, Dim::time);
  os << "workers = " << c.workers << '\n';
  return os.str();
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string scenario_hash(const ScenarioConfig& cfg) {
  ScenarioConfig c = cfg;
  c.workers = 0;
  return fnv1a_hex(write_scenario(c));
}

}  // namespace ringsim
