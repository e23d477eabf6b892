#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "psl/common.hpp"
#include "psl/grid.hpp"
#include "psl/heat1d.hpp"
#include "psl/norms.hpp"
#include "psl/solver2d.hpp"

namespace psl {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Scenario configuration

inline const std::vector<std::string>& scenario_kinds() {
  static const std::vector<std::string> k = {"sim2d",       "sim3d-linear", "heat-decay", "verify-inequalities",
                                             "lemma-audit", "smoothing-ladder"};
  return k;
}

struct ScenarioConfig {
  std::string kind = "sim2d";
  GridConfig grid;
  struct Physics {
    double eps0 = 0.01;
    double eps1 = 1e-3;
    double rho0 = 0.5;
    double lambda = 1.0;
    double lambda_tilde = 1.0;
    double delta = 0.8;
    bool operator==(const Physics&) const = default;
  } physics;
  struct Numerics {
    double dt = 1e-3;
    double t_final = 50.0;
    int cadence = 100;
    bool advection = true;
    int ladder_cap = 3;
    double fit_start = 10.0;
    double fit_end = 1000.0;
    double radius_floor = 1e-14;
    double rel_tol = 1e-6;
    bool operator==(const Numerics&) const = default;
  } numerics;
  struct Initial {
    std::string kind = "single_mode";
    std::string normalization = "h1_norm";
    int mode = 1;
    int modes = 8;
    double decay = 0.5;
    int ky_band = 4;
    std::string profile_csv;  // optional extra heat profile, two columns z,value
    bool operator==(const Initial&) const = default;
  } initial;
  struct Audit {
    std::vector<double> r_values{0.1, 0.5, 0.9};
    std::vector<int> caps{15, 25};
    int samples = 100;
    double t = 0.0;
    int k_max = 2;
    double lambda_sup = 0.25;
    double lambda_good_unknown = 0.5;
    std::vector<double> eps1_scan;  // optional shear amplitudes for the 3D monitor scan
    bool operator==(const Audit&) const = default;
  } audit;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_dir = "out";

  bool operator==(const ScenarioConfig&) const = default;
};

/// Defaults that depend on the experiment kind.
inline ScenarioConfig default_config(const std::string& kind) {
  ScenarioConfig c;
  c.kind = kind;
  if (kind == "sim2d") {
    // library defaults
  } else if (kind == "sim3d-linear") {
    c.grid = GridConfig{2.0 * kPi, 16, 20.0, 129, 0.0, 2.0 * kPi, 16};
    c.numerics.dt = 5e-3;
    c.numerics.t_final = 20.0;
    c.numerics.cadence = 20;
    c.numerics.rel_tol = 1e-5;
    c.initial.normalization = "coefficient";
    c.initial.kind = "band";
  } else if (kind == "heat-decay") {
    c.grid = GridConfig{2.0 * kPi, 4, 400.0, 2001, 4.5, 2.0 * kPi, 0};
    c.numerics.dt = 1e-2;
    c.numerics.t_final = 1000.0;
    c.numerics.cadence = 100;
  } else if (kind == "verify-inequalities") {
    c.numerics.t_final = 0.0;
  } else if (kind == "lemma-audit") {
    c.grid = GridConfig{2.0 * kPi, 4, 20.0, 2001, 0.0, 2.0 * kPi, 0};
    c.numerics.t_final = 0.0;
  } else if (kind == "smoothing-ladder") {
    c.grid = GridConfig{16.0 * kPi, 128, 20.0, 201, 0.0, 2.0 * kPi, 0};
    c.numerics.t_final = 5.0;
    c.numerics.cadence = 10;
    c.initial.kind = "random";
    c.initial.modes = 42;
    c.initial.decay = 0.25;
  } else {
    throw InvalidArgument("kind: unknown experiment kind '" + kind + "'");
  }
  return c;
}

namespace detail {

class StrictReader {
 public:
  StrictReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidArgument(where() + "expected an object");
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw InvalidArgument(sub(key) + ": expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw InvalidArgument(sub(key) + ": must be finite");
  }
  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw InvalidArgument(sub(key) + ": expected an integer");
    out = v.get<int>();
  }
  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw InvalidArgument(sub(key) + ": expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw InvalidArgument(sub(key) + ": expected a boolean");
    out = v.get<bool>();
  }
  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw InvalidArgument(sub(key) + ": expected a string");
    out = v.get<std::string>();
  }
  template <class T>
  void list(const std::string& key, std::vector<T>& out, bool allow_empty = false) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array() || (v.empty() && !allow_empty)) throw InvalidArgument(sub(key) + ": expected a non-empty array");
    out.clear();
    for (const auto& e : v) {
      if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) throw InvalidArgument(sub(key) + ": expected integers");
      } else {
        if (!e.is_number()) throw InvalidArgument(sub(key) + ": expected numbers");
      }
      out.push_back(e.get<T>());
    }
  }
  const json* object(const std::string& key) {
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw InvalidArgument(sub(it.key()) + ": unknown key");
  }

 private:
  std::string where() const { return path_.empty() ? "" : path_ + ": "; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& path, const std::string& msg) {
  if (!ok) throw InvalidArgument(path + ": " + msg);
}

}  // namespace detail

/// Validates ranges; every message names the offending key path.
inline void validate_config(const ScenarioConfig& c) {
  using detail::require;
  const auto& g = c.grid;
  require(g.nx >= 4 && g.nx % 2 == 0, "grid.nx", "tangential mode count must be even and at least 4");
  require(g.nz >= 9, "grid.nz", "vertical node count must be at least 9");
  require(g.z_max > 0.0, "grid.z_max", "must be positive");
  require(g.lx > 0.0, "grid.lx", "must be positive");
  require(g.stretch >= 0.0, "grid.stretch", "must be non-negative");
  require(g.ny == 0 || (g.ny >= 4 && g.ny % 2 == 0), "grid.ny", "must be 0 or an even count of at least 4");
  require(g.ly > 0.0, "grid.ly", "must be positive");
  if (c.kind == "sim3d-linear") require(g.ny != 0, "grid.ny", "3D runs need a second tangential mode count");
  else require(g.ny == 0, "grid.ny", "only 3D runs take a second tangential direction");
  require(c.physics.eps0 >= 0.0, "physics.eps0", "must be non-negative");
  require(c.physics.eps1 >= 0.0, "physics.eps1", "must be non-negative");
  require(c.physics.rho0 > 0.0, "physics.rho0", "must be positive");
  require(c.physics.lambda >= 0.0 && c.physics.lambda <= 1.0, "physics.lambda", "must lie in [0,1]");
  require(c.physics.lambda_tilde >= 0.0 && c.physics.lambda_tilde <= 1.0, "physics.lambda_tilde", "must lie in [0,1]");
  require(c.physics.delta > 0.0 && c.physics.delta < 2.0, "physics.delta", "must lie in (0,2)");
  require(c.numerics.dt > 0.0, "numerics.dt", "must be positive");
  require(c.numerics.t_final >= 0.0, "numerics.t_final", "must be non-negative");
  require(c.numerics.cadence >= 1, "numerics.cadence", "must be at least 1");
  require(c.numerics.ladder_cap >= 0 && c.numerics.ladder_cap <= 3, "numerics.ladder_cap", "must lie in [0,3]");
  require(c.numerics.fit_start >= 0.0 && c.numerics.fit_end > c.numerics.fit_start, "numerics.fit_end",
          "fit window must satisfy 0 <= fit_start < fit_end");
  require(c.numerics.radius_floor > 0.0 && c.numerics.radius_floor < 1.0, "numerics.radius_floor", "must lie in (0,1)");
  require(c.numerics.rel_tol >= 0.0, "numerics.rel_tol", "must be non-negative");
  static const std::set<std::string> init_kinds = {"single_mode", "random", "zero", "band"};
  require(init_kinds.count(c.initial.kind) == 1, "initial.kind", "must be single_mode, random, zero or band");
  require(c.initial.normalization == "h1_norm" || c.initial.normalization == "coefficient", "initial.normalization",
          "must be h1_norm or coefficient");
  require(c.initial.mode >= 1, "initial.mode", "must be at least 1");
  require(c.initial.modes >= 1, "initial.modes", "must be at least 1");
  require(c.initial.decay >= 0.0, "initial.decay", "must be non-negative");
  require(c.initial.ky_band >= 0, "initial.ky_band", "must be non-negative");
  require(c.initial.profile_csv.empty() || c.kind == "heat-decay", "initial.profile_csv", "only heat-decay runs take a profile file");
  for (double e : c.audit.eps1_scan) require(e >= 0.0, "audit.eps1_scan", "entries must be non-negative");
  require(c.audit.eps1_scan.empty() || c.kind == "sim3d-linear", "audit.eps1_scan", "only 3D runs scan the shear amplitude");
  for (double r : c.audit.r_values) require(r > 0.0 && r < 1.0, "audit.r_values", "entries must lie in (0,1)");
  for (int cap : c.audit.caps) require(cap >= 1 && cap <= 30, "audit.caps", "entries must lie in [1,30]");
  require(c.audit.samples >= 1, "audit.samples", "must be at least 1");
  require(c.audit.t >= 0.0, "audit.t", "must be non-negative");
  require(c.audit.k_max >= 0 && c.audit.k_max <= 2, "audit.k_max", "must lie in [0,2]");
  require(c.audit.lambda_sup >= 0.0 && c.audit.lambda_sup <= 1.0, "audit.lambda_sup", "must lie in [0,1]");
  require(c.audit.lambda_good_unknown >= 0.0 && c.audit.lambda_good_unknown < 1.0, "audit.lambda_good_unknown", "must lie in [0,1)");
  require(c.threads >= 1, "threads", "must be at least 1");
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
}

/// Strict parse: unknown keys and type mismatches are errors. `kind` may come
/// from the document or from `default_kind` (the CLI subcommand); they must agree.
inline ScenarioConfig parse_config(const std::string& text, const std::string& default_kind = "") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config: malformed JSON: ") + e.what());
  }
  detail::StrictReader top(j, "");
  std::string kind = default_kind;
  if (top.has("kind")) {
    std::string k;
    top.string("kind", k);
    if (!default_kind.empty() && k != default_kind)
      throw InvalidArgument("kind: config declares '" + k + "' but '" + default_kind + "' was requested");
    kind = k;
  }
  if (kind.empty()) throw InvalidArgument("kind: experiment kind missing");
  ScenarioConfig c = default_config(kind);
  if (const json* o = top.object("grid")) {
    detail::StrictReader r(*o, "grid");
    r.number("lx", c.grid.lx);
    r.integer("nx", c.grid.nx);
    r.number("z_max", c.grid.z_max);
    r.integer("nz", c.grid.nz);
    r.number("stretch", c.grid.stretch);
    r.number("ly", c.grid.ly);
    r.integer("ny", c.grid.ny);
    r.finish();
  }
  if (const json* o = top.object("physics")) {
    detail::StrictReader r(*o, "physics");
    r.number("eps0", c.physics.eps0);
    r.number("eps1", c.physics.eps1);
    r.number("rho0", c.physics.rho0);
    r.number("lambda", c.physics.lambda);
    r.number("lambda_tilde", c.physics.lambda_tilde);
    r.number("delta", c.physics.delta);
    r.finish();
  }
  if (const json* o = top.object("numerics")) {
    detail::StrictReader r(*o, "numerics");
    r.number("dt", c.numerics.dt);
    r.number("t_final", c.numerics.t_final);
    r.integer("cadence", c.numerics.cadence);
    r.boolean("advection", c.numerics.advection);
    r.integer("ladder_cap", c.numerics.ladder_cap);
    r.number("fit_start", c.numerics.fit_start);
    r.number("fit_end", c.numerics.fit_end);
    r.number("radius_floor", c.numerics.radius_floor);
    r.number("rel_tol", c.numerics.rel_tol);
    r.finish();
  }
  if (const json* o = top.object("initial")) {
    detail::StrictReader r(*o, "initial");
    r.string("kind", c.initial.kind);
    r.string("normalization", c.initial.normalization);
    r.integer("mode", c.initial.mode);
    r.integer("modes", c.initial.modes);
    r.number("decay", c.initial.decay);
    r.integer("ky_band", c.initial.ky_band);
    r.string("profile_csv", c.initial.profile_csv);
    r.finish();
  }
  if (const json* o = top.object("audit")) {
    detail::StrictReader r(*o, "audit");
    r.list("r_values", c.audit.r_values);
    r.list("caps", c.audit.caps);
    r.integer("samples", c.audit.samples);
    r.number("t", c.audit.t);
    r.integer("k_max", c.audit.k_max);
    r.number("lambda_sup", c.audit.lambda_sup);
    r.number("lambda_good_unknown", c.audit.lambda_good_unknown);
    r.list("eps1_scan", c.audit.eps1_scan, true);
    r.finish();
  }
  top.unsigned64("seed", c.seed);
  top.integer("threads", c.threads);
  top.string("output_dir", c.output_dir);
  top.finish();
  validate_config(c);
  return c;
}

/// Effective configuration with every default written out.
inline json config_to_json(const ScenarioConfig& c) {
  json j;
  j["kind"] = c.kind;
  j["grid"] = {{"lx", c.grid.lx},       {"nx", c.grid.nx}, {"z_max", c.grid.z_max}, {"nz", c.grid.nz},
               {"stretch", c.grid.stretch}, {"ly", c.grid.ly}, {"ny", c.grid.ny}};
  j["physics"] = {{"eps0", c.physics.eps0},     {"eps1", c.physics.eps1},
                  {"rho0", c.physics.rho0},     {"lambda", c.physics.lambda},
                  {"lambda_tilde", c.physics.lambda_tilde}, {"delta", c.physics.delta}};
  j["numerics"] = {{"dt", c.numerics.dt},
                   {"t_final", c.numerics.t_final},
                   {"cadence", c.numerics.cadence},
                   {"advection", c.numerics.advection},
                   {"ladder_cap", c.numerics.ladder_cap},
                   {"fit_start", c.numerics.fit_start},
                   {"fit_end", c.numerics.fit_end},
                   {"radius_floor", c.numerics.radius_floor},
                   {"rel_tol", c.numerics.rel_tol}};
  j["initial"] = {{"kind", c.initial.kind},   {"normalization", c.initial.normalization},
                  {"mode", c.initial.mode},   {"modes", c.initial.modes},
                  {"decay", c.initial.decay}, {"ky_band", c.initial.ky_band}, {"profile_csv", c.initial.profile_csv}};
  j["audit"] = {{"r_values", c.audit.r_values}, {"caps", c.audit.caps},         {"samples", c.audit.samples},
                {"t", c.audit.t},               {"k_max", c.audit.k_max},       {"lambda_sup", c.audit.lambda_sup},
                {"lambda_good_unknown", c.audit.lambda_good_unknown}, {"eps1_scan", c.audit.eps1_scan}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  return j;
}

inline std::string config_echo(const ScenarioConfig& c) { return config_to_json(c).dump(2) + "\n"; }

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("write failed for " + p.string());
}

// ---------------------------------------------------------------------------
// CSV series

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string series_to_csv(const NormReport& rep) {
  std::string s;
  for (std::size_t i = 0; i < rep.columns.size(); ++i) s += (i ? "," : "") + rep.columns[i];
  s += "\n";
  for (const auto& row : rep.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ",";
      s += format_double(row[i]);
    }
    s += "\n";
  }
  return s;
}

inline void write_series(const NormReport& rep, const std::filesystem::path& p) { write_text(p, series_to_csv(rep)); }

inline NormReport read_series(const std::filesystem::path& p) {
  std::istringstream in(read_text(p));
  std::string line;
  if (!std::getline(in, line)) throw Error("empty series file " + p.string());
  std::vector<std::string> cols;
  {
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
  }
  NormReport rep(cols);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) row.push_back(std::strtod(c.c_str(), nullptr));
    rep.append(std::move(row));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Vertical profiles

/// Reads a two-column "z,value" CSV (an optional non-numeric header line is
/// skipped) and interpolates it linearly onto the grid nodes. Nodes above the
/// last sample get zero.
inline std::vector<double> read_profile_csv(const std::filesystem::path& p, const VerticalGrid& g) {
  std::istringstream in(read_text(p));
  std::vector<double> zs, vs;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidArgument(p.string() + ": expected two comma-separated columns");
    char* end = nullptr;
    const double z = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) {
      if (first) {
        first = false;
        continue;
      }
      throw InvalidArgument(p.string() + ": non-numeric row '" + line + "'");
    }
    first = false;
    const double v = std::strtod(line.c_str() + comma + 1, nullptr);
    if (!std::isfinite(z) || !std::isfinite(v)) throw InvalidArgument(p.string() + ": non-finite entry");
    if (!zs.empty() && !(z > zs.back())) throw InvalidArgument(p.string() + ": z must be strictly increasing");
    zs.push_back(z);
    vs.push_back(v);
  }
  if (zs.size() < 2) throw InvalidArgument(p.string() + ": a profile needs at least two rows");
  if (zs.front() > 0.0) throw InvalidArgument(p.string() + ": profile must start at z = 0");
  const auto z = g.z();
  std::vector<double> h(g.size(), 0.0);
  for (int i = 0; i < g.size(); ++i) {
    if (z[i] > zs.back()) continue;
    const auto it = std::upper_bound(zs.begin(), zs.end(), z[i]);
    const std::size_t k = it == zs.end() ? zs.size() - 1 : std::size_t(it - zs.begin());
    const std::size_t j = k == 0 ? 0 : k - 1;
    const double w = (z[i] - zs[j]) / (zs[k] - zs[j]);
    h[i] = (1.0 - w) * vs[j] + w * vs[k];
  }
  return h;
}

// ---------------------------------------------------------------------------
// Checkpoints: <stem>.json header + <stem>.bin payload of little-endian doubles.

struct Checkpoint {
  GridConfig grid;
  double t = 0.0;
  double dt = 0.0;
  std::int64_t step_index = 0;
  std::map<std::string, double> scalars;
  std::vector<std::pair<std::string, std::vector<cplx>>> fields;
};

inline constexpr int kCheckpointVersion = 1;

inline void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& c) {
  static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");
  const int modes = HalfStripGrid(c.grid).mode_count();
  json h;
  h["format"] = "psl-checkpoint";
  h["version"] = kCheckpointVersion;
  h["endianness"] = "little";
  h["grid"] = {{"lx", c.grid.lx}, {"nx", c.grid.nx},       {"z_max", c.grid.z_max}, {"nz", c.grid.nz},
               {"stretch", c.grid.stretch}, {"ly", c.grid.ly}, {"ny", c.grid.ny}};
  h["t"] = c.t;
  h["dt"] = c.dt;
  h["step_index"] = c.step_index;
  h["scalars"] = json::object();
  for (const auto& [k, v] : c.scalars) h["scalars"][k] = v;
  h["fields"] = json::array();
  std::string payload;
  for (const auto& [name, data] : c.fields) {
    if (data.size() != std::size_t(modes) * c.grid.nz) throw InvalidArgument("checkpoint field has wrong size");
    h["fields"].push_back({{"name", name}, {"shape", {modes, c.grid.nz, 2}}});
    payload.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(cplx));
  }
  // Scalars are stored bitwise in the payload as well so the text form never
  // has to round-trip them.
  for (const auto& [k, v] : c.scalars) payload.append(reinterpret_cast<const char*>(&v), sizeof v);
  h["t_bits"] = std::bit_cast<std::uint64_t>(c.t);
  h["dt_bits"] = std::bit_cast<std::uint64_t>(c.dt);
  auto js = stem;
  js += ".json";
  auto bin = stem;
  bin += ".bin";
  write_text(bin, payload);
  write_text(js, h.dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  auto js = stem;
  js += ".json";
  auto bin = stem;
  bin += ".bin";
  json h;
  try {
    h = json::parse(read_text(js));
  } catch (const json::parse_error& e) {
    throw Error(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  if (h.value("format", "") != "psl-checkpoint") throw Error("not a checkpoint header");
  if (h.value("version", -1) != kCheckpointVersion) throw Error("checkpoint version mismatch");
  if (h.value("endianness", "") != "little") throw Error("unsupported checkpoint endianness");
  Checkpoint c;
  const auto& g = h.at("grid");
  c.grid = GridConfig{g.at("lx").get<double>(), g.at("nx").get<int>(), g.at("z_max").get<double>(),
                      g.at("nz").get<int>(),    g.at("stretch").get<double>(), g.at("ly").get<double>(),
                      g.at("ny").get<int>()};
  c.t = std::bit_cast<double>(h.at("t_bits").get<std::uint64_t>());
  c.dt = std::bit_cast<double>(h.at("dt_bits").get<std::uint64_t>());
  c.step_index = h.at("step_index").get<std::int64_t>();
  const std::string payload = read_text(bin);
  std::size_t expected = 0;
  for (const auto& f : h.at("fields")) {
    const auto shape = f.at("shape").get<std::vector<std::int64_t>>();
    std::int64_t n = 1;
    for (auto s : shape) n *= s;
    expected += std::size_t(n) * sizeof(double);
  }
  expected += h.at("scalars").size() * sizeof(double);
  if (payload.size() != expected) throw Error("checkpoint payload length does not match its header");
  std::size_t off = 0;
  for (const auto& f : h.at("fields")) {
    const auto shape = f.at("shape").get<std::vector<std::int64_t>>();
    if (shape.size() != 3 || shape[2] != 2) throw Error("checkpoint field shape is malformed");
    std::vector<cplx> data(std::size_t(shape[0] * shape[1]));
    std::memcpy(data.data(), payload.data() + off, data.size() * sizeof(cplx));
    off += data.size() * sizeof(cplx);
    c.fields.emplace_back(f.at("name").get<std::string>(), std::move(data));
  }
  // nlohmann orders object keys, matching the std::map order used on save.
  for (auto it = h.at("scalars").begin(); it != h.at("scalars").end(); ++it) {
    double v;
    std::memcpy(&v, payload.data() + off, sizeof v);
    off += sizeof v;
    c.scalars[it.key()] = v;
  }
  const int modes = HalfStripGrid(c.grid).mode_count();
  for (const auto& [name, data] : c.fields)
    if (data.size() != std::size_t(modes) * c.grid.nz) throw Error("checkpoint field does not match its grid");
  return c;
}

inline Checkpoint checkpoint_from_state(const State2D& s, double cum_dissipation) {
  Checkpoint c;
  c.grid = s.u.grid().config();
  c.t = s.t;
  c.dt = s.dt;
  c.step_index = s.step_index;
  c.scalars["cum_dissipation"] = cum_dissipation;
  c.fields.emplace_back("u", s.u.data());
  if (!s.u_prev.empty()) c.fields.emplace_back("u_prev", s.u_prev.data());
  return c;
}

inline State2D state_from_checkpoint(const Checkpoint& c, double& cum_dissipation) {
  auto grid = make_grid(c.grid);
  State2D s;
  s.t = c.t;
  s.dt = c.dt;
  s.step_index = c.step_index;
  for (const auto& [name, data] : c.fields) {
    SpectralField f(grid);
    f.data() = data;
    if (name == "u") s.u = std::move(f);
    else if (name == "u_prev") s.u_prev = std::move(f);
    else throw Error("unexpected checkpoint field " + name);
  }
  if (s.u.empty()) throw Error("checkpoint lacks field u");
  const auto it = c.scalars.find("cum_dissipation");
  cum_dissipation = it == c.scalars.end() ? 0.0 : it->second;
  return s;
}

// ---------------------------------------------------------------------------
// SVG plots

namespace detail {

inline std::string svg_header(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n"
         "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n"
         "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         title + "</text>\n"
                 "<rect x=\"70\" y=\"40\" width=\"540\" height=\"330\" fill=\"none\" stroke=\"black\"/>\n";
}

inline std::string polyline(const std::vector<double>& x, const std::vector<double>& y, double x0, double x1,
                            double y0, double y1, const std::string& colour) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double px = 70.0 + 540.0 * (x[i] - x0) / (x1 - x0);
    const double py = 370.0 - 330.0 * (y[i] - y0) / (y1 - y0);
    s += format_double(px) + "," + format_double(py) + " ";
  }
  return s + "\"/>\n";
}

inline std::string axis_labels(const std::string& xl, const std::string& yl, double x0, double x1, double y0,
                               double y1) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "<text x=\"340\" y=\"405\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">%s "
                "[%.3g, %.3g]</text>\n<text x=\"16\" y=\"210\" font-family=\"sans-serif\" font-size=\"12\" "
                "transform=\"rotate(-90 16 210)\" text-anchor=\"middle\">%s [%.3g, %.3g]</text>\n",
                xl.c_str(), x0, x1, yl.c_str(), y0, y1);
  return buf;
}

}  // namespace detail

/// Log-log decay plot of value against 1+t with the fitted slope over [ta, tb].
/// Returns the slope that was annotated.
inline double render_decay_plot(std::span<const double> t, std::span<const double> v, double ta, double tb,
                                const std::string& title, const std::filesystem::path& out) {
  if (t.size() < 2) throw InvalidArgument("insufficient samples");
  const double slope = fit_decay(t, v, ta, tb);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (v[i] > 0.0) {
      x.push_back(std::log10(1.0 + t[i]));
      y.push_back(std::log10(v[i]));
    }
  if (x.size() < 2) throw InvalidArgument("insufficient samples");
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  const double x0 = *xmin, x1 = *xmax > *xmin ? *xmax : *xmin + 1.0;
  const double y0 = *ymin, y1 = *ymax > *ymin ? *ymax : *ymin + 1.0;
  std::string s = detail::svg_header(title);
  s += detail::polyline(x, y, x0, x1, y0, y1, "steelblue");
  s += detail::axis_labels("log10(1+t)", "log10(value)", x0, x1, y0, y1);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "<text x=\"600\" y=\"60\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"13\">fitted "
                "slope %.2f</text>\n",
                slope);
  s += buf;
  s += "</svg>\n";
  write_text(out, s);
  return slope;
}

/// Energy plot: norm^2 + cumulative dissipation against t with the budget line.
inline void render_energy_plot(std::span<const double> t, std::span<const double> energy, double budget,
                               const std::string& title, const std::filesystem::path& out) {
  if (t.size() < 2) throw InvalidArgument("insufficient samples");
  std::vector<double> x(t.begin(), t.end()), y(energy.begin(), energy.end());
  const double x0 = x.front(), x1 = x.back() > x.front() ? x.back() : x.front() + 1.0;
  double ymax = budget;
  for (double e : y) ymax = std::max(ymax, e);
  const double y0 = 0.0, y1 = ymax > 0.0 ? 1.1 * ymax : 1.0;
  std::string s = detail::svg_header(title);
  s += detail::polyline(x, y, x0, x1, y0, y1, "steelblue");
  s += detail::polyline({x0, x1}, {budget, budget}, x0, x1, y0, y1, "firebrick");
  s += detail::axis_labels("t", "energy", x0, x1, y0, y1);
  s += "<text x=\"600\" y=\"60\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"13\" "
       "fill=\"firebrick\">budget " +
       format_double(budget) + "</text>\n</svg>\n";
  write_text(out, s);
}

}  // namespace psl
