#pragma once

// Scenario files, CSV emission and key = value reports.
//
// Scenario format, one entry per line:
//
//   # comment            ; comment
//   jacobi.alpha = 1.0
//   [grid]
//   n_t = 129            # same as grid.n_t
//
// Keys outside a [section] may carry their section as a dotted prefix.

#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "sulph/core.hpp"
#include "sulph/coupled.hpp"
#include "sulph/fd_oracle.hpp"
#include "sulph/jacobi.hpp"

namespace sulph {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  require(res.ec == std::errc{} && res.ptr == v.data() + v.size(), "scenario: " + key + " expects a number, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  require(res.ec == std::errc{} && res.ptr == v.data() + v.size(),
          "scenario: " + key + " expects a nonnegative integer, got '" + v + "'");
  return out;
}

}  // namespace detail

/// Where the boundary datum comes from.
enum class PsiSource { Sampled, File, Profile };

struct Scenario {
  JacobiParams jacobi{.alpha = 1.0, .gamma_level = 0.5, .sigma = std::sqrt(0.5), .eta = 1.0, .psi0 = 0.0};
  Scheme scheme = Scheme::FullTruncation;
  PsiSource psi_source = PsiSource::Sampled;
  std::string psi_file;
  std::string psi_profile = "sin2";  // zero | constant | sin2
  double psi_level = 1.0;            // fraction of eta

  ModelParams model;
  std::string s0_profile = "bump";   // zero | bump: min(eta, a eta x e^{1-x})
  double s0_amplitude = 1.0;
  std::string c0_profile = "constant";  // constant | dip: value - depth e^{-x}
  double c0_value = std::numeric_limits<double>::quiet_NaN();  // NaN means C0
  double c0_depth = 0.0;

  GridSpec grid{1.0, 129, 12.0, 241};
  SolverConfig solver;
  FdConfig fd;
  double norm_beta = 0.3;
  double norm_q = 2.0;

  std::uint64_t seed = 0;
  std::string outputs = "out";
  std::size_t ensemble = 1;

  double c0_level() const { return std::isnan(c0_value) ? model.C0 : c0_value; }

  void validate() const {
    grid.validate();
    model.validate();
    solver.validate();
    fd.validate();
    require(ensemble >= 1, "scenario: ensemble must be >= 1");
    require(std::isfinite(psi_level) && psi_level >= 0.0 && psi_level <= 1.0, "scenario: psi.level must lie in [0, 1]");
    if (psi_source == PsiSource::Sampled) {
      jacobi.validate();
      require(std::abs(jacobi.eta - model.eta) <= 1e-12 * model.eta, "scenario: jacobi.eta must equal model.eta");
    }
    require((psi_source == PsiSource::File) == !psi_file.empty(),
            "scenario: psi.file must be set exactly when psi.source = file");
    if (psi_source == PsiSource::Profile)
      require(psi_profile == "zero" || psi_profile == "constant" || psi_profile == "sin2",
              "scenario: unknown psi.profile '" + psi_profile + "'");
    require(s0_profile == "zero" || s0_profile == "bump", "scenario: unknown data.s0 '" + s0_profile + "'");
    require(c0_profile == "constant" || c0_profile == "dip", "scenario: unknown data.c0 '" + c0_profile + "'");
  }
};

/// One settable scenario key.
struct ScenarioKey {
  std::string name;
  std::string help;
  std::function<void(Scenario&, const std::string&)> set;
};

inline const std::vector<ScenarioKey>& scenario_keys() {
  using detail::parse_double;
  using detail::parse_unsigned;
  static const std::vector<ScenarioKey> keys = [] {
    std::vector<ScenarioKey> k;
    auto real = [&](std::string name, std::string help, auto member) {
      k.push_back({name, std::move(help), [name, member](Scenario& s, const std::string& v) {
                     member(s) = parse_double(name, v);
                   }});
    };
    auto count = [&](std::string name, std::string help, auto member) {
      k.push_back({name, std::move(help), [name, member](Scenario& s, const std::string& v) {
                     member(s) = static_cast<std::remove_reference_t<decltype(member(s))>>(parse_unsigned(name, v));
                   }});
    };
    auto text = [&](std::string name, std::string help, auto member) {
      k.push_back({name, std::move(help), [member](Scenario& s, const std::string& v) { member(s) = v; }});
    };
    real("jacobi.alpha", "mean-reversion rate", [](Scenario& s) -> double& { return s.jacobi.alpha; });
    real("jacobi.gamma", "mean-reversion level", [](Scenario& s) -> double& { return s.jacobi.gamma_level; });
    real("jacobi.sigma", "noise amplitude", [](Scenario& s) -> double& { return s.jacobi.sigma; });
    k.push_back({"jacobi.sigma2", "squared noise amplitude", [](Scenario& s, const std::string& v) {
                   const double s2 = parse_double("jacobi.sigma2", v);
                   require(s2 >= 0.0, "scenario: jacobi.sigma2 must be nonnegative");
                   s.jacobi.sigma = std::sqrt(s2);
                 }});
    real("jacobi.eta", "upper barrier of the signal", [](Scenario& s) -> double& { return s.jacobi.eta; });
    real("jacobi.psi0", "initial value of the signal", [](Scenario& s) -> double& { return s.jacobi.psi0; });
    k.push_back({"jacobi.scheme", "full_truncation | clamped",
                 [](Scenario& s, const std::string& v) { s.scheme = parse_scheme(v); }});
    k.push_back({"psi.source", "sampled | file | profile", [](Scenario& s, const std::string& v) {
                   if (v == "sampled") s.psi_source = PsiSource::Sampled;
                   else if (v == "file") s.psi_source = PsiSource::File;
                   else if (v == "profile") s.psi_source = PsiSource::Profile;
                   else throw ValidationError("scenario: unknown psi.source '" + v + "'");
                 }});
    text("psi.file", "path CSV with header t,psi", [](Scenario& s) -> std::string& { return s.psi_file; });
    text("psi.profile", "zero | constant | sin2", [](Scenario& s) -> std::string& { return s.psi_profile; });
    real("psi.level", "profile amplitude as a fraction of eta", [](Scenario& s) -> double& { return s.psi_level; });
    real("model.lambda", "reaction rate", [](Scenario& s) -> double& { return s.model.lambda; });
    real("model.B", "porosity coupling, -1 or +1", [](Scenario& s) -> double& { return s.model.B; });
    real("model.C0", "initial level of the second species", [](Scenario& s) -> double& { return s.model.C0; });
    real("model.m", "porosity lower bound parameter", [](Scenario& s) -> double& { return s.model.m; });
    real("model.eta", "upper bound of s", [](Scenario& s) -> double& { return s.model.eta; });
    text("data.s0", "zero | bump", [](Scenario& s) -> std::string& { return s.s0_profile; });
    real("data.s0_amplitude", "bump amplitude", [](Scenario& s) -> double& { return s.s0_amplitude; });
    text("data.c0", "constant | dip", [](Scenario& s) -> std::string& { return s.c0_profile; });
    real("data.c0_value", "c0 level (defaults to model.C0)", [](Scenario& s) -> double& { return s.c0_value; });
    real("data.c0_depth", "depth of the dip at x = 0", [](Scenario& s) -> double& { return s.c0_depth; });
    real("grid.T", "time horizon", [](Scenario& s) -> double& { return s.grid.T; });
    count("grid.n_t", "time nodes", [](Scenario& s) -> std::size_t& { return s.grid.n_t; });
    real("grid.L", "truncated half-line length", [](Scenario& s) -> double& { return s.grid.L; });
    count("grid.n_x", "space nodes", [](Scenario& s) -> std::size_t& { return s.grid.n_x; });
    real("solver.picard_tol", "linear iteration tolerance", [](Scenario& s) -> double& { return s.solver.picard_tol; });
    count("solver.max_picard", "linear iteration cap", [](Scenario& s) -> std::size_t& { return s.solver.max_picard; });
    real("solver.outer_tol", "fixed-point tolerance", [](Scenario& s) -> double& { return s.solver.outer_tol; });
    count("solver.max_outer", "fixed-point iteration cap", [](Scenario& s) -> std::size_t& { return s.solver.max_outer; });
    count("solver.quad_nodes", "accepted, unused", [](Scenario& s) -> std::size_t& { return s.solver.quad_nodes; });
    count("solver.max_bisections", "window bisection depth", [](Scenario& s) -> std::size_t& { return s.solver.max_bisections; });
    real("solver.holder_beta", "Hoelder exponent for stability ratios", [](Scenario& s) -> double& { return s.solver.holder_beta; });
    real("fd.theta", "0 explicit, 0.5 Crank-Nicolson, 1 implicit", [](Scenario& s) -> double& { return s.fd.theta; });
    real("fd.cfl_safety", "explicit step safety factor", [](Scenario& s) -> double& { return s.fd.cfl_safety; });
    count("fd.substeps", "internal steps per grid step", [](Scenario& s) -> std::size_t& { return s.fd.substeps; });
    real("norms.beta", "Hoelder exponent for reports", [](Scenario& s) -> double& { return s.norm_beta; });
    real("norms.q", "integrability exponent for reports", [](Scenario& s) -> double& { return s.norm_q; });
    count("seed", "master seed", [](Scenario& s) -> std::uint64_t& { return s.seed; });
    text("outputs", "output directory", [](Scenario& s) -> std::string& { return s.outputs; });
    count("ensemble", "number of ensemble members", [](Scenario& s) -> std::size_t& { return s.ensemble; });
    return k;
  }();
  return keys;
}

using ScenarioEntries = std::vector<std::pair<std::string, std::string>>;

/// Flattens a scenario text into (dotted key, value) pairs in file order.
inline ScenarioEntries parse_scenario_text(std::string_view text, const std::string& origin = "scenario") {
  ScenarioEntries out;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    std::string line = detail::trim(raw.substr(0, raw.find_first_of("#;")));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() > 2, where + "malformed section header");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, where + "expected key = value");
    std::string key = detail::trim(std::string_view(line).substr(0, eq));
    std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    require(!key.empty(), where + "empty key");
    out.emplace_back(section.empty() ? key : section + "." + key, value);
  }
  return out;
}

/// Applies entries in order; unknown keys are a schema violation.
inline void apply_entries(Scenario& sc, const ScenarioEntries& entries) {
  const auto& keys = scenario_keys();
  for (const auto& [key, value] : entries) {
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const ScenarioKey& k) { return k.name == key; });
    require(it != keys.end(), "scenario: unknown key '" + key + "'");
    it->set(sc, value);
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot read file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Scenario from a file, then overrides (later entries win), then validation.
inline Scenario load_scenario(const std::filesystem::path& path, const ScenarioEntries& overrides = {}) {
  Scenario sc;
  if (!path.empty()) apply_entries(sc, parse_scenario_text(read_text_file(path), path.string()));
  apply_entries(sc, overrides);
  if (sc.psi_source == PsiSource::File && !path.empty() && std::filesystem::path(sc.psi_file).is_relative())
    sc.psi_file = (path.parent_path() / sc.psi_file).string();
  sc.validate();
  return sc;
}

/// Writes through a temporary sibling and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot write file '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    require(static_cast<bool>(out), "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string path_csv(const BoundaryPath& psi) {
  std::string out = "t,psi\n";
  for (std::size_t k = 0; k < psi.size(); ++k)
    out += format_double(psi.times[k]) + "," + format_double(psi.values[k]) + "\n";
  return out;
}

inline BoundaryPath parse_path_csv(std::string_view text, const std::string& origin = "path csv") {
  BoundaryPath psi;
  std::istringstream in{std::string(text)};
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && detail::trim(line) == "t,psi", origin + ": header must be t,psi");
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, origin + ": expected two columns");
    psi.times.push_back(detail::parse_double("t", detail::trim(std::string_view(line).substr(0, comma))));
    psi.values.push_back(detail::parse_double("psi", detail::trim(std::string_view(line).substr(comma + 1))));
  }
  psi.validate();
  return psi;
}

inline BoundaryPath read_path_csv(const std::filesystem::path& path) {
  return parse_path_csv(read_text_file(path), path.string());
}

inline std::string field_csv(const Field& f) {
  const GridSpec& g = f.grid();
  std::string out = "t,x,value\n";
  for (std::size_t k = 0; k < g.n_t; ++k) {
    const std::string t = format_double(g.t(k)) + ",";
    for (std::size_t j = 0; j < g.n_x; ++j) out += t + format_double(g.x(j)) + "," + format_double(f(k, j)) + "\n";
  }
  return out;
}

inline std::string solution_csv(const SolutionPair& sol) {
  const GridSpec& g = sol.s.grid();
  std::string out = "t,x,s,c\n";
  for (std::size_t k = 0; k < g.n_t; ++k) {
    const std::string t = format_double(g.t(k)) + ",";
    for (std::size_t j = 0; j < g.n_x; ++j)
      out += t + format_double(g.x(j)) + "," + format_double(sol.s(k, j)) + "," + format_double(sol.c(k, j)) + "\n";
  }
  return out;
}

/// Ordered key = value report.
class Report {
 public:
  void add(const std::string& key, double v) { rows_.emplace_back(key, format_double(v)); }
  void add(const std::string& key, std::size_t v) { rows_.emplace_back(key, std::to_string(v)); }
  void add(const std::string& key, bool v) { rows_.emplace_back(key, v ? "true" : "false"); }
  void add(const std::string& key, const std::string& v) { rows_.emplace_back(key, v); }
  void add(const std::string& key, const char* v) { rows_.emplace_back(key, v); }
  void add(const std::string& key, const std::optional<double>& v) {
    rows_.emplace_back(key, v ? format_double(*v) : "none");
  }

  const std::vector<std::pair<std::string, std::string>>& rows() const { return rows_; }

  std::string str() const {
    std::string out;
    for (const auto& [k, v] : rows_) out += k + " = " + v + "\n";
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

/// The boundary datum a scenario describes, on its time grid.
inline BoundaryPath scenario_path(const Scenario& sc, std::uint64_t seed) {
  const GridSpec& g = sc.grid;
  switch (sc.psi_source) {
    case PsiSource::Sampled:
      return sample_path(sc.jacobi, g.T, g.n_t, seed, sc.scheme);
    case PsiSource::File:
      return read_path_csv(sc.psi_file);
    case PsiSource::Profile:
      break;
  }
  const double a = sc.psi_level * sc.model.eta;
  if (sc.psi_profile == "zero") return path_from_function(g.T, g.n_t, [](double) { return 0.0; });
  if (sc.psi_profile == "constant") return path_from_function(g.T, g.n_t, [a](double) { return a; });
  const double T = g.T;
  return path_from_function(g.T, g.n_t, [a, T](double t) { return a * std::pow(std::sin(std::numbers::pi * t / T), 2); });
}

inline InitialData scenario_data(const Scenario& sc) {
  const double eta = sc.model.eta, amp = sc.s0_amplitude;
  const bool bump = sc.s0_profile == "bump";
  const double level = sc.c0_level(), depth = sc.c0_profile == "dip" ? sc.c0_depth : 0.0;
  return InitialData::from_profiles(
      sc.grid, [=](double x) { return bump ? std::min(eta, amp * eta * x * std::exp(1.0 - x)) : 0.0; },
      [=](double x) { return level - depth * std::exp(-x); });
}

}  // namespace sulph
