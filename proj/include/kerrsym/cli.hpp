#pragma once

// Batch front end: JSON run configuration, command dispatch, file output.
// Needs nlohmann/json on the include path.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kerrsym/classify.hpp"
#include "kerrsym/eigensolve.hpp"
#include "kerrsym/esqpt.hpp"
#include "kerrsym/io.hpp"
#include "kerrsym/sweep.hpp"
#include "kerrsym/u2_algebra.hpp"

namespace kerrsym::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kSchemaVersion = 1;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Command { Spectrum, Sweep, Crossings, Esqpt, Casimir, Track };

struct GridSpec {
  Parameter parameter = Parameter::Eta;
  double start = 0.0;
  double stop = 0.0;
  double step = 0.05;
};

struct RunConfig {
  Command command = Command::Spectrum;
  HamiltonianSpec hamiltonian;
  std::size_t n_max = kDefaultNMax;
  std::size_t n_probe = kDefaultNProbe;
  double tol_conv = kDefaultTolConv;
  double tol_deg = kDefaultTolDeg;
  std::optional<GridSpec> grid;
  std::string out_dir = ".";
  bool csv = true;
  bool svg = false;
  std::optional<Coloring> coloring;
  unsigned threads = 0;
  // command options
  std::size_t max_levels = 0;
  std::size_t v_max = 12;
  std::size_t casimir_n = 50;
  std::size_t refine = 0;
  std::int64_t track_eta0 = 0;
  HalfInteger track_m = HalfInteger::from_int(1);
  Perturbation track_kind = Perturbation::P2;
  std::vector<SeparatrixKind> overlays;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

inline std::size_t get_size(const json& obj, const char* key, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

inline Parameter parse_parameter(const std::string& s) {
  for (auto p : {Parameter::Eta, Parameter::Xi2, Parameter::Xi3, Parameter::Xi4, Parameter::XiN2})
    if (s == to_string(p)) return p;
  throw ConfigError("unknown parameter '" + s + "'");
}

inline Perturbation parse_perturbation(const std::string& s) {
  for (auto p : {Perturbation::P2, Perturbation::P3, Perturbation::P4, Perturbation::nP2})
    if (s == to_string(p)) return p;
  throw ConfigError("unknown perturbation '" + s + "'");
}

inline HalfInteger parse_half(const json& v) {
  if (v.is_number_integer()) return HalfInteger::from_int(v.get<std::int64_t>());
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return HalfInteger::from_int(std::stoll(s));
      if (s.substr(slash + 1) != "2") throw ConfigError("m must be an integer or k/2");
      return HalfInteger::from_twice(std::stoll(s.substr(0, slash)));
    } catch (const std::logic_error&) {
      throw ConfigError("cannot parse m = '" + s + "'");
    }
  }
  throw ConfigError("m must be an integer or a string like \"3/2\"");
}

inline SeparatrixKind parse_overlay(const std::string& s) {
  if (s == "kerr") return SeparatrixKind::Kerr;
  if (s == "squeeze") return SeparatrixKind::Squeeze;
  if (s == "combined_Es") return SeparatrixKind::CombinedEs;
  if (s == "combined_Es_prime") return SeparatrixKind::CombinedEsPrime;
  throw ConfigError("unknown separatrix overlay '" + s + "'");
}

inline double finite_or_throw(double x, const char* what) {
  if (!std::isfinite(x)) throw ConfigError(std::string(what) + " must be finite");
  return x;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::get;
  using detail::get_size;
  detail::reject_unknown(j,
                         {"schema_version", "command", "hamiltonian", "numeric", "grid", "output",
                          "coloring", "options"},
                         "config");
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer() ||
      j.at("schema_version").get<int>() != kSchemaVersion)
    throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));
  RunConfig c;

  static const std::map<std::string, Command> commands = {
      {"spectrum", Command::Spectrum}, {"sweep", Command::Sweep},     {"crossings", Command::Crossings},
      {"esqpt", Command::Esqpt},       {"casimir", Command::Casimir}, {"track", Command::Track}};
  const auto cmd = get<std::string>(j, "command", "");
  if (!commands.count(cmd)) throw ConfigError("unknown or missing command '" + cmd + "'");
  c.command = commands.at(cmd);

  if (j.contains("hamiltonian")) {
    const auto& h = j.at("hamiltonian");
    detail::reject_unknown(h, {"eta", "xi", "xi3", "xi4", "xi2_prime", "higher_order"}, "hamiltonian");
    c.hamiltonian.eta = detail::finite_or_throw(get<double>(h, "eta", 0.0), "eta");
    const std::pair<const char*, Perturbation> keys[] = {{"xi", Perturbation::P2},
                                                         {"xi3", Perturbation::P3},
                                                         {"xi4", Perturbation::P4},
                                                         {"xi2_prime", Perturbation::nP2}};
    for (const auto& [key, p] : keys)
      if (h.contains(key)) c.hamiltonian.set(p, detail::finite_or_throw(get<double>(h, key, 0.0), key));
    if (h.contains("higher_order")) {
      const auto& ho = h.at("higher_order");
      detail::reject_unknown(ho,
                             {"delta3", "kerr3", "eps2_3", "eps2_prime", "delta4", "kerr4", "lambda4",
                              "eps4_4"},
                             "higher_order");
      HigherOrderTerms t;
      t.delta3 = get<double>(ho, "delta3", 0.0);
      t.kerr3 = get<double>(ho, "kerr3", 0.0);
      t.eps2_3 = get<double>(ho, "eps2_3", 0.0);
      t.eps2_prime = get<double>(ho, "eps2_prime", 0.0);
      t.delta4 = get<double>(ho, "delta4", 0.0);
      t.kerr4 = get<double>(ho, "kerr4", 0.0);
      t.lambda4 = get<double>(ho, "lambda4", 0.0);
      t.eps4_4 = get<double>(ho, "eps4_4", 0.0);
      c.hamiltonian.higher_order = t;
    }
  }

  if (j.contains("numeric")) {
    const auto& n = j.at("numeric");
    detail::reject_unknown(n, {"n_max", "n_probe", "tol_conv", "tol_deg"}, "numeric");
    c.n_max = get_size(n, "n_max", c.n_max);
    c.n_probe = get_size(n, "n_probe", c.n_probe);
    c.tol_conv = get<double>(n, "tol_conv", c.tol_conv);
    c.tol_deg = get<double>(n, "tol_deg", c.tol_deg);
  }
  if (c.n_max == 0) throw ConfigError("n_max must be positive");
  if (c.n_probe <= c.n_max) throw ConfigError("n_probe must exceed n_max");
  if (!(c.tol_conv > 0.0) || !(c.tol_deg > 0.0)) throw ConfigError("tolerances must be positive");

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    detail::reject_unknown(g, {"parameter", "start", "stop", "step"}, "grid");
    GridSpec gs;
    gs.parameter = detail::parse_parameter(get<std::string>(g, "parameter", ""));
    gs.start = detail::finite_or_throw(get<double>(g, "start", 0.0), "grid.start");
    gs.stop = detail::finite_or_throw(get<double>(g, "stop", 0.0), "grid.stop");
    gs.step = detail::finite_or_throw(get<double>(g, "step", 0.05), "grid.step");
    if (!(gs.step > 0.0)) throw ConfigError("grid.step must be positive");
    if (!(gs.stop > gs.start)) throw ConfigError("grid.stop must exceed grid.start");
    c.grid = gs;
  }

  if (j.contains("output")) {
    const auto& o = j.at("output");
    detail::reject_unknown(o, {"directory", "formats"}, "output");
    c.out_dir = get<std::string>(o, "directory", c.out_dir);
    if (o.contains("formats")) {
      const auto fm = get<std::vector<std::string>>(o, "formats", {});
      c.csv = c.svg = false;
      for (const auto& f : fm) {
        if (f == "csv") c.csv = true;
        else if (f == "svg") c.svg = true;
        else throw ConfigError("unknown output format '" + f + "'");
      }
    }
  }

  if (j.contains("coloring")) {
    const auto s = get<std::string>(j, "coloring", "");
    c.coloring = parse_coloring(s);
    if (!c.coloring) throw ConfigError("unknown coloring '" + s + "'");
  }

  if (j.contains("options")) {
    const auto& o = j.at("options");
    detail::reject_unknown(o, {"max_levels", "v_max", "N", "refine", "eta0", "m", "kind", "overlays"},
                           "options");
    c.max_levels = get_size(o, "max_levels", c.max_levels);
    c.v_max = get_size(o, "v_max", c.v_max);
    c.casimir_n = get_size(o, "N", c.casimir_n);
    c.refine = get_size(o, "refine", c.refine);
    c.track_eta0 = get<std::int64_t>(o, "eta0", c.track_eta0);
    if (o.contains("m")) c.track_m = detail::parse_half(o.at("m"));
    if (o.contains("kind")) c.track_kind = detail::parse_perturbation(get<std::string>(o, "kind", ""));
    for (const auto& s : get<std::vector<std::string>>(o, "overlays", {}))
      c.overlays.push_back(detail::parse_overlay(s));
  }

  const bool needs_grid = c.command == Command::Sweep || c.command == Command::Crossings ||
                          c.command == Command::Esqpt || c.command == Command::Track;
  if (needs_grid && !c.grid) throw ConfigError("command needs a grid");
  if (c.command == Command::Esqpt && c.grid->parameter != Parameter::Xi2)
    throw ConfigError("esqpt needs a grid over xi");
  if (c.command == Command::Track && c.grid->parameter == Parameter::Eta)
    throw ConfigError("track needs a grid over a coupling");
  if (c.command == Command::Casimir && c.casimir_n == 0) throw ConfigError("options.N must be positive");
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------

namespace detail {

inline SweepPlan make_plan(const RunConfig& c) {
  SweepPlan p;
  p.varying = c.grid->parameter;
  p.grid = linspace_step(c.grid->start, c.grid->stop, c.grid->step);
  p.fixed = c.hamiltonian;
  p.n_max = c.n_max;
  p.n_probe = c.n_probe;
  p.tol_conv = c.tol_conv;
  p.max_levels = c.max_levels;
  p.threads = c.threads;
  if (c.command == Command::Esqpt) p.modulus = 2;
  return p;
}

inline void check_coloring(const RunConfig& c, std::size_t modulus) {
  if (c.coloring && !coloring_compatible(*c.coloring, modulus))
    throw ConfigError("coloring is incompatible with sector modulus " + std::to_string(modulus));
}

inline std::string path_in(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.out_dir) / name).string();
}

inline void emit_grid(const RunConfig& c, const SpectrumGrid& g, const std::string& stem) {
  if (c.csv) write_file(path_in(c, stem + ".csv"), sweep_csv(g, c.coloring));
  if (c.svg) {
    SvgStyle st;
    st.coloring = c.coloring;
    st.x_label = to_string(g.plan.varying);
    st.overlay_eta = g.plan.fixed.eta;
    st.overlay_xi = g.plan.fixed.coupling(Perturbation::P2);
    for (auto k : c.overlays) st.overlays.push_back(SeparatrixModel{k});
    write_file(path_in(c, stem + ".svg"), sweep_svg(g, st));
  }
}

inline std::string label_str(const std::optional<std::pair<QuasiSpinLabel, QuasiSpinLabel>>& l) {
  if (!l) return ",,";
  return l->first.j.str() + "," + l->first.m.str() + "," + l->second.m.str();
}

inline void run_spectrum(const RunConfig& c) {
  const auto s = converged_spectrum(c.hamiltonian, c.n_max, c.n_probe, c.tol_conv);
  check_coloring(c, s.modulus);
  std::ostringstream os;
  os << "level,sector_residue,local_index,energy,excitation_energy,converged,color_class\n";
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    const auto& l = s.levels[i];
    os << i << ',' << l.sector_residue << ',' << l.local_index << ',' << fmt_num(l.energy) << ','
       << fmt_num(l.energy - s.ground_energy) << ',' << int(l.converged) << ','
       << (c.coloring ? color_class(*c.coloring, s.modulus, l.sector_residue) : "") << '\n';
  }
  write_file(path_in(c, "spectrum.csv"), os.str());
}

inline void run_sweep_cmd(const RunConfig& c) {
  const auto plan = make_plan(c);
  check_coloring(c, sweep_modulus(plan));
  emit_grid(c, run_sweep(plan), "sweep");
}

inline void run_crossings(const RunConfig& c) {
  const auto plan = make_plan(c);
  check_coloring(c, sweep_modulus(plan));
  CrossingOptions opt;
  opt.tol_deg = c.tol_deg;
  if (c.max_levels) opt.max_levels = c.max_levels;
  auto grid = run_sweep(plan);
  auto events = detect_crossings(grid, opt);
  if (c.refine >= 2) {
    grid = refine_near(grid, events, c.refine);
    events = detect_crossings(grid, opt);
  }
  std::ostringstream os;
  os << "kind,param,sector_a,index_a,sector_b,index_b,min_gap,near_unconverged,j,m_a,m_b\n";
  for (const auto& e : events)
    os << (e.kind == CrossingKind::True ? "true" : "avoided") << ',' << fmt_num(e.param_value) << ','
       << e.sector_a << ',' << e.index_a << ',' << e.sector_b << ',' << e.index_b << ','
       << fmt_num(e.min_gap) << ',' << int(e.near_unconverged) << ',' << label_str(e.labels) << '\n';
  if (c.csv) write_file(path_in(c, "crossings.csv"), os.str());
  emit_grid(c, grid, "sweep");
}

inline void run_esqpt(const RunConfig& c) {
  RunConfig cc = c;
  if (cc.max_levels == 0) cc.max_levels = c.v_max + 1;
  const auto plan = make_plan(cc);
  check_coloring(c, 2);
  const auto grid = run_sweep(plan);
  const auto curves = gap_curves(grid, c.v_max);
  std::ostringstream gaps;
  gaps << "v,xi,gap,semi_sum\n";
  std::vector<CriticalPointEstimate> est;
  for (const auto& cv : curves) {
    for (std::size_t k = 0; k < cv.xi.size(); ++k)
      gaps << cv.v << ',' << fmt_num(cv.xi[k]) << ',' << fmt_num(cv.gap[k]) << ','
           << fmt_num(cv.semi_sum(k)) << '\n';
    for (auto r : {xi_c_max_rate(cv), xi_c_linear_extrapolation(cv), xi_c_difference_bound(cv)})
      if (r) est.push_back(*r);
  }
  std::ostringstream crit;
  crit << "v,method,xi_c,E_c,rel_dev\n";
  if (est.size() >= 3)
    for (const auto& p : separatrix_from_estimates(est))
      crit << p.v << ',' << to_string(p.method) << ',' << fmt_num(p.xi_c) << ',' << fmt_num(p.E_c)
           << ',' << fmt_num(p.rel_dev) << '\n';
  if (c.csv) {
    write_file(path_in(c, "esqpt_gaps.csv"), gaps.str());
    write_file(path_in(c, "esqpt_critical.csv"), crit.str());
  }
  RunConfig svg_only = c;
  svg_only.csv = false;
  if (svg_only.overlays.empty()) svg_only.overlays.push_back(SeparatrixKind::Squeeze);
  emit_grid(svg_only, grid, "sweep");
}

inline void run_casimir(const RunConfig& c) {
  const U2Rep rep{c.casimir_n};
  std::ostringstream os;
  os << "v,pi_prime,sigma,casimir,closed_form\n";
  for (const auto& l : casimir_spectrum(rep))
    os << l.v << ',' << l.pi_prime << ',' << l.label.sigma << ',' << fmt_num(l.value) << ','
       << fmt_num(casimir_closed_form(rep.N, l.v)) << '\n';
  write_file(path_in(c, "casimir.csv"), os.str());
}

inline void run_track(const RunConfig& c) {
  Perturbation kind = c.track_kind;
  switch (c.grid->parameter) {
    case Parameter::Xi2: kind = Perturbation::P2; break;
    case Parameter::Xi3: kind = Perturbation::P3; break;
    case Parameter::Xi4: kind = Perturbation::P4; break;
    case Parameter::XiN2: kind = Perturbation::nP2; break;
    case Parameter::Eta: break;
  }
  TrackingOptions opt;
  opt.n_max = c.n_max;
  const auto pts = track_crossing_location(c.track_eta0, c.track_m, kind,
                                           linspace_step(c.grid->start, c.grid->stop, c.grid->step), opt);
  std::ostringstream os;
  os << "xi,eta_star,residual\n";
  for (const auto& p : pts)
    os << fmt_num(p.xi) << ',' << (p.eta_star ? fmt_num(*p.eta_star) : "") << ','
       << fmt_num(p.residual) << '\n';
  write_file(path_in(c, "track.csv"), os.str());
}

}  // namespace detail

/// Executes one command; returns the process exit status.
inline int run(const RunConfig& c, std::ostream& err = std::cerr) {
  try {
    std::error_code ec;
    std::filesystem::create_directories(c.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + c.out_dir + ": " + ec.message());
    switch (c.command) {
      case Command::Spectrum: detail::run_spectrum(c); break;
      case Command::Sweep: detail::run_sweep_cmd(c); break;
      case Command::Crossings: detail::run_crossings(c); break;
      case Command::Esqpt: detail::run_esqpt(c); break;
      case Command::Casimir: detail::run_casimir(c); break;
      case Command::Track: detail::run_track(c); break;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace kerrsym::cli
