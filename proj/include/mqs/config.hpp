#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mqs/fem.hpp"
#include "mqs/integrate.hpp"
#include "mqs/material.hpp"
#include "mqs/mesh.hpp"
#include "mqs/sparse.hpp"

namespace mqs {

// Source current i(t) = I0 (1 - e^{-t/T})
struct Excitation {
  double amplitude = 5.64;     // A
  double time_constant = 0.5;  // s

  double operator()(double t) const { return amplitude * (1.0 - std::exp(-t / time_constant)); }
};

// ---------------------------------------------------------------------------
// plain-text configuration files: a small TOML subset with [sections],
// `key = value` lines, quoted strings, numbers, booleans and flat arrays
// ---------------------------------------------------------------------------

class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
  }

  static ConfigFile parse_string(const std::string& text, const std::string& name = "<config>") {
    ConfigFile cfg;
    cfg.name_ = name;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      strip_comment(line);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']') cfg.fail(lineno, "unterminated section header");
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        if (section.empty()) cfg.fail(lineno, "empty section name");
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) cfg.fail(lineno, "expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) cfg.fail(lineno, "empty key");
      if (value.empty()) cfg.fail(lineno, "empty value for key '" + key + "'");
      Entry e;
      e.line = lineno;
      e.raw = value;
      cfg.entries_[section.empty() ? key : section + "." + key] = std::move(e);
    }
    return cfg;
  }

  bool has(const std::string& section, const std::string& key) const {
    return entries_.count(qualified(section, key)) > 0;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    return parse_double(*e, section, key);
  }

  int get_int(const std::string& section, const std::string& key, int fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    const double v = parse_double(*e, section, key);
    const int i = static_cast<int>(std::llround(v));
    if (std::abs(v - i) > 1e-9) fail(e->line, "expected an integer for " + qualified(section, key));
    return i;
  }

  std::uint64_t get_uint64(const std::string& section, const std::string& key, std::uint64_t fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    try {
      return std::stoull(strip_quotes(e->raw));
    } catch (const std::exception&) {
      fail(e->line, "expected an unsigned integer for " + qualified(section, key));
    }
    return fallback;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    if (e->raw == "true") return true;
    if (e->raw == "false") return false;
    fail(e->line, "expected true/false for " + qualified(section, key));
    return fallback;
  }

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    return strip_quotes(e->raw);
  }

  std::vector<std::string> get_string_list(const std::string& section, const std::string& key,
                                           std::vector<std::string> fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    const std::string& raw = e->raw;
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']')
      fail(e->line, "expected an array for " + qualified(section, key));
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(raw.substr(1, raw.size() - 2));
    while (std::getline(in, item, ',')) {
      const std::string v = strip_quotes(trim(item));
      if (!v.empty()) out.push_back(v);
    }
    return out;
  }

 private:
  struct Entry {
    std::string raw;
    int line = 0;
  };

  static void strip_comment(std::string& line) {
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quotes = !in_quotes;
      if (line[i] == '#' && !in_quotes) {
        line.erase(i);
        return;
      }
    }
  }

  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
  }

  static std::string qualified(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
  }

  const Entry* find(const std::string& section, const std::string& key) const {
    const auto it = entries_.find(qualified(section, key));
    return it == entries_.end() ? nullptr : &it->second;
  }

  double parse_double(const Entry& e, const std::string& section, const std::string& key) const {
    const std::string v = strip_quotes(e.raw);
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      fail(e.line, "expected a number for " + qualified(section, key));
    }
    if (used != v.size()) fail(e.line, "trailing characters after number for " + qualified(section, key));
    return x;
  }

  [[noreturn]] void fail(int line, const std::string& what) const {
    throw std::runtime_error(name_ + ":" + std::to_string(line) + ": " + what);
  }

  std::string name_;
  std::map<std::string, Entry> entries_;
};

inline Scheme parse_scheme(const std::string& text, int default_stages = 10) {
  if (text == "euler") return Scheme::euler();
  if (text == "implicit") return Scheme::implicit();
  if (text == "rkc") return Scheme::rkc(default_stages);
  if (text.rfind("rkc", 0) == 0) {
    std::string rest = text.substr(3);
    if (!rest.empty() && rest.front() == ':') rest.erase(0, 1);
    try {
      const int s = std::stoi(rest);
      return Scheme::rkc(s);
    } catch (const std::exception&) {
    }
  }
  throw std::runtime_error("unknown scheme '" + text + "' (expected euler, rkc<stages> or implicit)");
}

// ---------------------------------------------------------------------------
// full run configuration with benchmark defaults
// ---------------------------------------------------------------------------

struct ProbeSpec {
  std::string name;
  Rect rect;
};

struct RunConfig {
  // mesh
  int resolution = 2;
  int order = 1;
  double air_size = 0.2;        // m, square air box
  double plate_width = 0.0032;  // m
  double plate_height = 0.05;
  double coil_width = 0.01;
  double coil_height = 0.05;
  double coil_gap = 0.005;
  double air_coarsening = 2.0;

  // material
  std::string material_model = "brauer";  // brauer | table | linear
  double brauer_k1 = 3.8, brauer_k2 = 2.17, brauer_k3 = 396.2;
  std::string table_path;
  double linear_nu = 400.0;
  double kappa = 1.0e7;  // S/m; iron-like benchmark value

  // excitation
  double current_amplitude = 5.64;  // A
  double coil_turns = 162.0;
  double time_constant = 0.5;  // s

  // time integration
  Scheme scheme = Scheme::euler();
  double end_time = 0.15;
  double output_dt = 0.005;
  double implicit_dt = 1e-3;
  double update_tol = 0.005;

  // solvers
  double pcg_tol = 1e-10;
  int pcg_max_iter = 50000;
  int pod_size = 10;
  double lambda_tol = 1e-3;
  int lambda_max_iter = 200;
  double safety = 0.9;
  double lambda_inflation = 1.05;
  double picard_tol = 1e-8;
  int picard_max_iter = 50;
  std::uint64_t seed = 1234;

  // output
  std::string out_dir = "out";
  bool write_vtk = false;
  bool write_matrices = false;

  std::vector<std::string> compare_schemes = {"implicit", "euler", "rkc10"};

  static RunConfig from_file(const std::string& path) {
    RunConfig cfg;
    cfg.apply(ConfigFile::parse_file(path));
    return cfg;
  }

  void apply(const ConfigFile& f) {
    resolution = f.get_int("mesh", "resolution", resolution);
    order = f.get_int("mesh", "order", order);
    air_size = f.get_double("mesh", "air_size", air_size);
    plate_width = f.get_double("mesh", "plate_width", plate_width);
    plate_height = f.get_double("mesh", "plate_height", plate_height);
    coil_width = f.get_double("mesh", "coil_width", coil_width);
    coil_height = f.get_double("mesh", "coil_height", coil_height);
    coil_gap = f.get_double("mesh", "coil_gap", coil_gap);
    air_coarsening = f.get_double("mesh", "air_coarsening", air_coarsening);

    material_model = f.get_string("material", "model", material_model);
    brauer_k1 = f.get_double("material", "k1", brauer_k1);
    brauer_k2 = f.get_double("material", "k2", brauer_k2);
    brauer_k3 = f.get_double("material", "k3", brauer_k3);
    table_path = f.get_string("material", "table", table_path);
    linear_nu = f.get_double("material", "nu", linear_nu);
    kappa = f.get_double("material", "kappa", kappa);

    current_amplitude = f.get_double("excitation", "amplitude", current_amplitude);
    coil_turns = f.get_double("excitation", "turns", coil_turns);
    time_constant = f.get_double("excitation", "time_constant", time_constant);

    const int stages = f.get_int("time", "stages", scheme.stages > 0 ? scheme.stages : 10);
    scheme = parse_scheme(f.get_string("time", "scheme", scheme.name()), stages);
    if (scheme.kind == SchemeKind::Rkc) scheme.stages = stages;
    end_time = f.get_double("time", "end_time", end_time);
    output_dt = f.get_double("time", "output_dt", output_dt);
    implicit_dt = f.get_double("time", "implicit_dt", implicit_dt);
    update_tol = f.get_double("time", "update_tol", update_tol);

    pcg_tol = f.get_double("solver", "pcg_tol", pcg_tol);
    pcg_max_iter = f.get_int("solver", "pcg_max_iter", pcg_max_iter);
    pod_size = f.get_int("solver", "pod_size", pod_size);
    lambda_tol = f.get_double("solver", "lambda_tol", lambda_tol);
    lambda_max_iter = f.get_int("solver", "lambda_max_iter", lambda_max_iter);
    safety = f.get_double("solver", "safety", safety);
    lambda_inflation = f.get_double("solver", "lambda_inflation", lambda_inflation);
    picard_tol = f.get_double("solver", "picard_tol", picard_tol);
    picard_max_iter = f.get_int("solver", "picard_max_iter", picard_max_iter);
    seed = f.get_uint64("solver", "seed", seed);

    out_dir = f.get_string("output", "dir", out_dir);
    write_vtk = f.get_bool("output", "vtk", write_vtk);
    write_matrices = f.get_bool("output", "matrices", write_matrices);

    compare_schemes = f.get_string_list("compare", "schemes", compare_schemes);
  }

  void validate() const {
    if (resolution < 1) throw std::runtime_error("config: resolution must be >= 1");
    if (order != 1 && order != 2) throw std::runtime_error("config: order must be 1 or 2");
    if (end_time < 0.0) throw std::runtime_error("config: end_time must be >= 0");
    if (scheme.kind == SchemeKind::Rkc && scheme.stages < 2)
      throw std::runtime_error("config: rkc needs stages >= 2");
    if (!(kappa > 0.0)) throw std::runtime_error("config: kappa must be positive");
    if (!(time_constant > 0.0)) throw std::runtime_error("config: time_constant must be positive");
    if (!(implicit_dt > 0.0)) throw std::runtime_error("config: implicit_dt must be positive");
  }

  BenchmarkGeometry make_geometry() const {
    BenchmarkGeometry g;
    g.air_coarsening = air_coarsening;
    g.air_box = Rect::centered(0, 0, air_size, air_size);
    if (plate_width > 0.0 && plate_height > 0.0) g.plate = Rect::centered(0, 0, plate_width, plate_height);
    if (coil_width > 0.0 && coil_height > 0.0 && !g.plate.empty()) {
      g.coil_plus = {g.plate.x1 + coil_gap, -coil_height / 2, g.plate.x1 + coil_gap + coil_width,
                     coil_height / 2};
      g.coil_minus = {g.plate.x0 - coil_gap - coil_width, -coil_height / 2, g.plate.x0 - coil_gap,
                      coil_height / 2};
    }
    g.validate();
    return g;
  }

  BHCurve make_curve() const {
    if (material_model == "brauer") return BHCurve::brauer(brauer_k1, brauer_k2, brauer_k3);
    if (material_model == "linear") return BHCurve::linear(linear_nu);
    if (material_model == "table") {
      if (table_path.empty()) throw std::runtime_error("config: material.model = table needs material.table");
      return BHCurve::from_file(table_path);
    }
    throw std::runtime_error("config: unknown material model '" + material_model + "'");
  }

  Materials make_materials() const {
    Materials m;
    m.conductor_kappa = kappa;
    m.conductor_curve = make_curve();
    return m;
  }

  Excitation make_excitation() const { return {current_amplitude, time_constant}; }

  // Default probes: the plate cross-section cut into three equal slices along
  // its long axis (whole-domain thirds when there is no plate).
  std::vector<ProbeSpec> make_probes() const {
    const BenchmarkGeometry g = make_geometry();
    const Rect base = g.plate.empty() ? g.air_box : g.plate;
    std::vector<ProbeSpec> probes;
    const bool split_y = base.height() >= base.width();
    for (int i = 0; i < 3; ++i) {
      Rect r = base;
      if (split_y) {
        r.y0 = base.y0 + base.height() * i / 3.0;
        r.y1 = base.y0 + base.height() * (i + 1) / 3.0;
      } else {
        r.x0 = base.x0 + base.width() * i / 3.0;
        r.x1 = base.x0 + base.width() * (i + 1) / 3.0;
      }
      probes.push_back({"S" + std::to_string(i + 1), r});
    }
    return probes;
  }

  SchurOperatorOptions make_operator_options() const {
    SchurOperatorOptions o;
    o.pcg.rel_tol = pcg_tol;
    o.pcg.max_iter = pcg_max_iter;
    o.pod_size = pod_size;
    o.lambda.rel_tol = lambda_tol;
    o.lambda.max_iter = lambda_max_iter;
    o.seed = seed;
    return o;
  }
};

}  // namespace mqs
