#include "gpe/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "gpe/format.hpp"
#include "gpe/gpfix.hpp"
#include "gpe/parallel.hpp"

namespace gpe {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kKnownFields = {
    "command", "potential", "k",         "delta",    "sigma",       "A",       "nu",
    "t",       "j",         "j_max",     "R0",       "coeff",       "nodes",   "r_max",
    "fp_tol",  "max_iters", "cutoff",    "enforce_smallness",       "attempts", "samples",
    "directions", "seed",   "root_tol",  "out",      "workers"};

Command parse_command(const std::string& s) {
  if (s == "solve") return Command::Solve;
  if (s == "iso" || s == "isoenergetic") return Command::Iso;
  if (s == "scan" || s == "nonres-scan") return Command::Scan;
  throw ConfigError("unknown command '" + s + "'");
}

template <class T>
T get(const nlohmann::json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

double get_number(const nlohmann::json& doc, const char* key, double fallback) {
  if (!doc.contains(key)) return fallback;
  if (!doc.at(key).is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
  return doc.at(key).get<double>();
}

int get_int(const nlohmann::json& doc, const char* key, int fallback) {
  if (!doc.contains(key)) return fallback;
  if (!doc.at(key).is_number_integer())
    throw ConfigError(std::string("field '") + key + "' must be an integer");
  return doc.at(key).get<int>();
}

Vec3 get_vec3(const nlohmann::json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
    throw ConfigError(std::string("field '") + key + "' must be an array of three numbers");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }
nlohmann::json freq_json(const Frequency& f) { return nlohmann::json::array({f[0], f[1], f[2]}); }

TrigPolynomial load_checked_potential(const RunConfig& cfg) {
  try {
    return load_potential(cfg.potential, {.real_valued = true, .mean_free = true});
  } catch (const PotentialFormatError& e) {
    throw ConfigError(e.what());
  }
}

// Each file is assembled in memory and written in one piece. The output
// directory is created only after the configuration and potential passed
// validation.
void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

fs::path prepare_out(const RunConfig& cfg) {
  fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + cfg.out + ": " + ec.message());
  return dir;
}

nlohmann::json envelope(const RunConfig& cfg) {
  nlohmann::json doc;
  doc["config"] = cfg.to_json();
  if (cfg.timestamp) doc["generated"] = utc_timestamp();
  return doc;
}

std::string json_text(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

void csv_header(CsvTable& table, const RunConfig& cfg) {
  table.add_comment("config: " + cfg.to_json().dump());
  if (cfg.timestamp) table.add_comment("generated: " + utc_timestamp());
}

std::string opt(double x) { return format_double(x); }

}  // namespace

const char* command_name(Command c) {
  switch (c) {
    case Command::Solve: return "solve";
    case Command::Iso: return "iso";
    case Command::Scan: return "scan";
  }
  return "?";
}

SolverSettings RunConfig::settings() const {
  SolverSettings s;
  s.delta = delta;
  s.j_max = j_max;
  s.R0 = R0;
  s.coeff = coeff;
  s.nodes = nodes;
  s.r_max = r_max;
  return s;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j_out{{"command", command_name(command)},
                       {"potential", potential},
                       {"k", k},
                       {"delta", delta},
                       {"sigma", sigma},
                       {"A", {{"modulus", A_modulus}, {"phase", A_phase}}},
                       {"j_max", j_max},
                       {"R0", R0},
                       {"coeff", coeff},
                       {"nodes", nodes},
                       {"r_max", r_max},
                       {"fp_tol", fp_tol},
                       {"max_iters", max_iters},
                       {"cutoff", cutoff},
                       {"enforce_smallness", enforce_smallness},
                       {"attempts", attempts},
                       {"samples", samples},
                       {"directions", directions},
                       {"seed", seed},
                       {"root_tol", root_tol}};
  if (nu) j_out["nu"] = vec_json(*nu);
  if (t) j_out["t"] = vec_json(*t);
  if (j) j_out["j"] = freq_json(*j);
  // The output directory and worker count do not influence results and
  // are left out so that outputs compare equal across machines.
  return j_out;
}

void RunConfig::validate() const {
  try {
    settings().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (potential.empty()) throw ConfigError("field 'potential' is required");
  if (!(std::isfinite(sigma))) throw ConfigError("sigma must be finite");
  if (!(A_modulus > 0.0 && std::isfinite(A_modulus))) throw ConfigError("A.modulus must be positive");
  if (!std::isfinite(A_phase)) throw ConfigError("A.phase must be finite");
  if (fp_tol < 0.0) throw ConfigError("fp_tol must be >= 0");
  if (cutoff < 0.0) throw ConfigError("cutoff must be >= 0");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (attempts < 1) throw ConfigError("attempts must be >= 1");
  if (directions < 1) throw ConfigError("directions must be >= 1");
  if (!(root_tol > 0.0)) throw ConfigError("root_tol must be positive");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (command == Command::Iso && samples < 100) throw ConfigError("samples must be >= 100");
  if (nu) {
    const double n = std::sqrt(dot(*nu, *nu));
    if (!(n > 0.0)) throw ConfigError("nu must be nonzero");
  }
  if (t.has_value() != j.has_value()) throw ConfigError("'t' and 'j' must be given together");
  if (t && nu) throw ConfigError("give either 'nu' or 't' with 'j', not both");
  if (t && !QuasiMomentum{*t}.in_cell()) throw ConfigError("t must lie in [0, 1)^3");

  double kk = k;
  if (command == Command::Solve) {
    if (!nu && !t) throw ConfigError("solve needs 'nu' or 't' with 'j'");
    if (t) {
      const Vec3 p{(*t)[0] + (*j)[0], (*t)[1] + (*j)[1], (*t)[2] + (*j)[2]};
      kk = std::sqrt(dot(p, p));
    }
  }
  if (!(kk > 1.0 && std::isfinite(kk))) throw ConfigError("k must exceed 1");
  if (!(kk * kk > std::pow(kk, -1.0 - delta))) throw ConfigError("spectral window must not contain 0");
  if (enforce_smallness && std::abs(sigma) * A_modulus * A_modulus >= std::pow(kk, -1.0 - 6.0 * delta))
    throw ConfigError("|sigma| |A|^2 must be below k^{-1-6 delta}");
}

RunConfig parse_config(const nlohmann::json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!kKnownFields.count(key)) throw ConfigError("unknown configuration field '" + key + "'");

  RunConfig c;
  if (doc.contains("command")) c.command = parse_command(get<std::string>(doc, "command", "solve"));
  if (doc.contains("potential")) {
    fs::path p(get<std::string>(doc, "potential", ""));
    if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
    c.potential = p.lexically_normal().string();
  }
  c.k = get_number(doc, "k", c.k);
  c.delta = get_number(doc, "delta", c.delta);
  c.sigma = get_number(doc, "sigma", c.sigma);
  if (doc.contains("A")) {
    const auto& a = doc.at("A");
    if (!a.is_object()) throw ConfigError("field 'A' must be an object");
    for (const auto& [key, value] : a.items())
      if (key != "modulus" && key != "phase") throw ConfigError("unknown field 'A." + key + "'");
    c.A_modulus = get_number(a, "modulus", c.A_modulus);
    c.A_phase = get_number(a, "phase", c.A_phase);
  }
  if (doc.contains("nu")) {
    Vec3 v = get_vec3(doc, "nu");
    const double n = std::sqrt(dot(v, v));
    if (n > 0.0) v = {v[0] / n, v[1] / n, v[2] / n};
    c.nu = v;
  }
  if (doc.contains("t")) c.t = get_vec3(doc, "t");
  if (doc.contains("j")) {
    const auto& v = doc.at("j");
    if (!v.is_array() || v.size() != 3 || !v[0].is_number_integer() || !v[1].is_number_integer() ||
        !v[2].is_number_integer())
      throw ConfigError("field 'j' must be an array of three integers");
    c.j = Frequency{v[0].get<int>(), v[1].get<int>(), v[2].get<int>()};
  }
  c.j_max = get_number(doc, "j_max", c.j_max);
  c.R0 = get_number(doc, "R0", c.R0);
  c.coeff = get_number(doc, "coeff", c.coeff);
  c.nodes = get_int(doc, "nodes", c.nodes);
  c.r_max = get_int(doc, "r_max", c.r_max);
  c.fp_tol = get_number(doc, "fp_tol", c.fp_tol);
  c.max_iters = get_int(doc, "max_iters", c.max_iters);
  c.cutoff = get_number(doc, "cutoff", c.cutoff);
  c.enforce_smallness = get<bool>(doc, "enforce_smallness", c.enforce_smallness);
  c.attempts = get_int(doc, "attempts", c.attempts);
  c.samples = get_int(doc, "samples", c.samples);
  c.directions = get_int(doc, "directions", c.directions);
  if (doc.contains("seed")) {
    const auto& sd = doc.at("seed");
    if (!sd.is_number_integer() || (!sd.is_number_unsigned() && sd.get<long long>() < 0))
      throw ConfigError("field 'seed' must be a nonnegative integer");
    c.seed = sd.get<std::uint64_t>();
  }
  c.root_tol = get_number(doc, "root_tol", c.root_tol);
  c.out = get<std::string>(doc, "out", c.out);
  if (doc.contains("workers")) {
    const int w = get_int(doc, "workers", 1);
    if (w < 1) throw ConfigError("workers must be >= 1");
    c.workers = static_cast<unsigned>(w);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open configuration " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("configuration is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc, fs::path(path).parent_path().string());
}

int run_solve(const RunConfig& cfg) {
  cfg.validate();
  const TrigPolynomial v = load_checked_potential(cfg);
  const SolverSettings s = cfg.settings();
  const fs::path dir = prepare_out(cfg);

  SpectralSetup setup;
  NonResReport report;
  int attempt = 0;
  if (cfg.nu) {
    try {
      AdmissiblePoint p = find_admissible_t(*cfg.nu, cfg.k, v, s, cfg.attempts, cfg.seed);
      setup = std::move(p.setup);
      report = p.report;
      attempt = p.attempt;
    } catch (const NoAdmissiblePoint&) {
      // Report the unperturbed point so the failure can be inspected.
      const Vec3 kvec{cfg.k * (*cfg.nu)[0], cfg.k * (*cfg.nu)[1], cfg.k * (*cfg.nu)[2]};
      setup = build_setup(v, kvec, s);
      nlohmann::json doc = envelope(cfg);
      doc["report"] = to_json(check_nonresonance(setup, s));
      doc["admissible"] = false;
      write_file(dir / "nonres.json", json_text(doc));
      throw;
    }
  } else {
    const Vec3 kvec{(*cfg.t)[0] + (*cfg.j)[0], (*cfg.t)[1] + (*cfg.j)[1], (*cfg.t)[2] + (*cfg.j)[2]};
    setup = build_setup(v, kvec, s);
    report = check_nonresonance(setup, s);
  }

  nlohmann::json nr = envelope(cfg);
  nr["report"] = to_json(report);
  nr["admissible"] = report.passed;
  nr["attempt"] = attempt;
  nr["k_used"] = setup.k;
  nr["j_star"] = freq_json(setup.split.j);
  nr["t"] = vec_json(setup.split.t.t);
  nr["basis_size"] = setup.basis.size();
  nr["model"] = to_json(setup.model);
  write_file(dir / "nonres.json", json_text(nr));
  if (!report.passed) throw NoAdmissiblePoint("the configured quasimomentum fails the non-resonance checks");

  GPEConfig g;
  g.V = v;
  g.sigma = cfg.sigma;
  g.A = std::polar(cfg.A_modulus, cfg.A_phase);
  g.settings = s;
  g.setup = setup;
  g.max_iters = cfg.max_iters;
  g.fp_tol = cfg.fp_tol;
  g.cutoff = cfg.cutoff;
  g.enforce_smallness = cfg.enforce_smallness;
  g.full_matrices = true;
  const GPESolver solver(std::move(g));
  const FixedPointReport fp = solver.iterate();

  CsvTable steps({"m", "diff_norm", "ratio", "lambda_m", "proj_diff"});
  csv_header(steps, cfg);
  for (const auto& st : fp.steps)
    steps.add_row({std::to_string(st.m), opt(st.diff_norm), opt(st.ratio), opt(st.lambda_m), opt(st.proj_diff)});
  write_file(dir / "steps.csv", steps.str());

  const SolutionRecord sol = solver.assemble_solution(fp);
  nlohmann::json out = envelope(cfg);
  out["solution"] = to_json(sol);
  nlohmann::json fpj = to_json(fp);
  fpj.erase("W_final");
  out["fixed_point"] = fpj;
  try {
    const NewtonResult nw = solver.oracle_newton(sol);
    out["newton_oracle"] = {{"lambda", nw.lambda},
                            {"distance", nw.distance},
                            {"iterations", nw.iterations},
                            {"residual", nw.final_residual}};
  } catch (const NewtonDiverged& e) {
    out["newton_oracle"] = {{"error", e.what()}};
  }
  write_file(dir / "solution.json", json_text(out));
  return kExitOk;
}

int run_isoenergetic(const RunConfig& cfg) {
  cfg.validate();
  const TrigPolynomial v = load_checked_potential(cfg);
  const fs::path dir = prepare_out(cfg);

  IsoConfig ic;
  ic.V = v;
  ic.sigma = cfg.sigma;
  ic.A = std::polar(cfg.A_modulus, cfg.A_phase);
  ic.settings = cfg.settings();
  ic.max_iters = cfg.max_iters;
  ic.fp_tol = cfg.fp_tol;
  ic.cutoff = cfg.cutoff;
  ic.enforce_smallness = cfg.enforce_smallness;
  ic.attempts = cfg.attempts;
  ic.tol = cfg.root_tol;
  ic.seed = cfg.seed;
  ic.workers = cfg.workers;
  const double lambda = cfg.k * cfg.k;

  const auto surface = trace_surface(lambda, fibonacci_directions(static_cast<std::size_t>(cfg.directions)), ic);
  CsvTable table({"nu_x", "nu_y", "nu_z", "kappa", "h", "grad_h_1", "grad_h_2", "passed", "newton_residual"});
  csv_header(table, cfg);
  for (const auto& s : surface)
    table.add_row({opt(s.nu[0]), opt(s.nu[1]), opt(s.nu[2]), opt(s.kappa), opt(s.h), opt(s.grad_h[0]),
                   opt(s.grad_h[1]), s.passed ? "1" : "0", opt(s.newton_residual)});

  const MeasureEstimate m = estimate_measure(lambda, cfg.samples, cfg.seed, ic);
  nlohmann::json doc = envelope(cfg);
  doc["measure"] = to_json(m);
  int passing = 0;
  for (const auto& s : surface) passing += s.passed ? 1 : 0;
  doc["surface"] = {{"directions", surface.size()}, {"passed", passing}};

  write_file(dir / "surface.csv", table.str());
  write_file(dir / "measure.json", json_text(doc));
  if (passing == 0 && m.passes == 0) throw NoAdmissiblePoint("no direction admitted a solution");
  return kExitOk;
}

int run_nonres_scan(const RunConfig& cfg) {
  cfg.validate();
  const TrigPolynomial v = load_checked_potential(cfg);
  const SolverSettings s = cfg.settings();
  const fs::path dir = prepare_out(cfg);

  const auto dirs = fibonacci_directions(static_cast<std::size_t>(cfg.directions));
  std::vector<NonResReport> reports(dirs.size());
  parallel_for(dirs.size(), cfg.workers, [&](std::size_t i) {
    const Vec3 kvec{cfg.k * dirs[i][0], cfg.k * dirs[i][1], cfg.k * dirs[i][2]};
    reports[i] = check_nonresonance(build_setup(v, kvec, s), s);
  });
  CsvTable table({"nu_x", "nu_y", "nu_z", "passed", "margin_min"});
  csv_header(table, cfg);
  for (std::size_t i = 0; i < dirs.size(); ++i)
    table.add_row({opt(dirs[i][0]), opt(dirs[i][1]), opt(dirs[i][2]), reports[i].passed ? "1" : "0",
                   opt(reports[i].margin_min())});
  write_file(dir / "scan.csv", table.str());
  return kExitOk;
}

int run(const RunConfig& cfg) {
  try {
    switch (cfg.command) {
      case Command::Solve: return run_solve(cfg);
      case Command::Iso: return run_isoenergetic(cfg);
      case Command::Scan: return run_nonres_scan(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const BasisTooLarge& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DecompositionError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SpectralError& e) {
    std::cerr << "mathematical failure: " << e.what() << '\n';
    return kExitMath;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace gpe
