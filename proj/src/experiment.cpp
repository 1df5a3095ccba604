#include "lrrte/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace lrrte {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double get_number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(std::string("'") + key + "' must be finite");
  return x;
}

long get_integer(const json& obj, const char* key, long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(std::string("'") + key + "' must be an integer");
  return v.get<long>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

template <class F>
auto parse_enum(F&& f, const std::string& s, const char* what) {
  try {
    return f(s);
  } catch (const std::exception&) {
    throw ConfigError(std::string("invalid ") + what + " '" + s + "'");
  }
}

void require_open_unit(double x, const char* name) {
  if (!(x > 0.0 && x < 1.0)) throw ConfigError(std::string(name) + " must lie in (0, 1)");
}

void validate(const ExperimentConfig& cfg) {
  const StudyConfig& s = cfg.study;
  const SolverParams& p = s.params;
  if (s.sizes.empty()) throw ConfigError("size ladder is empty");
  const ManufacturedCase c = manufactured_case(s.case_id);
  for (std::size_t i = 0; i < s.sizes.size(); ++i) {
    const auto [J, N] = s.sizes[i];
    try {
      make_spec(c, s.scheme, J, N);
    } catch (const std::exception& ex) {
      throw ConfigError("size (" + std::to_string(J) + ", " + std::to_string(N) + "): " + ex.what());
    }
    if (i > 0 && J < s.sizes[i - 1].first) throw ConfigError("sizes must be ascending in J");
  }
  if (!(p.eps_target > 0.0)) throw ConfigError("eps_target must be positive");
  require_open_unit(p.eps_precond, "eps_precond");
  require_open_unit(p.theta, "theta");
  require_open_unit(p.nu, "nu");
  if (!(p.delta0 > 0.0)) throw ConfigError("delta0 must be positive");
  if (!(p.eta0 > 0.0)) throw ConfigError("eta0 must be positive");
  if (p.max_iter < 0) throw ConfigError("max_iter must be nonnegative");
  if (!(s.scaled_tolerance > 0.0)) throw ConfigError("scaled_tolerance must be positive");
  if (s.jobs < 1) throw ConfigError("jobs must be at least 1");
  if (cfg.verify.trials < 1 || cfg.verify.threshold_trials < 1) throw ConfigError("verify trial counts must be positive");

  // tau ranges depend on rho, which depends on the case coefficients only
  const auto [J0, N0] = s.sizes.front();
  const CoercivityConstants k = coercivity_constants(make_spec(c, s.scheme, J0, N0));
  const DerivedConstants d = derived_constants(k.gamma1, k.gamma2, p.eps_precond);
  try {
    inexact_constants(p, d);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
}

void emit(std::ostringstream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) os << ",\n";
        first = false;
        os << pad << json(key).dump() << ": ";
        emit(os, value, indent, depth + 1);
      }
      os << "\n" << close_pad << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        emit(os, j[i], indent, depth + 1);
      }
      os << "\n" << close_pad << "]";
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      if (!std::isfinite(x)) {
        os << "null";
      } else {
        os << format_double(x);
      }
      return;
    }
    default:
      os << j.dump();
  }
}

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

std::string csv_optional(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  check_keys(j,
             {"schema_version", "case", "scheme", "sizes", "variant", "tolerance_rule", "scaled_tolerance", "params",
              "output_dir", "seed", "jobs", "verify"},
             "config");
  if (!j.contains("schema_version")) throw ConfigError("missing schema_version");
  ExperimentConfig cfg;
  cfg.schema_version = static_cast<int>(get_integer(j, "schema_version", 0));
  if (cfg.schema_version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version));
  }
  StudyConfig& s = cfg.study;
  s.case_id = parse_enum(case_from_string, get_string(j, "case", "TC1"), "case");
  s.scheme = parse_enum(scheme_from_string, get_string(j, "scheme", "SN"), "scheme");
  s.variant = parse_enum(variant_from_string, get_string(j, "variant", "st"), "variant");
  s.tolerance_rule = parse_enum(tolerance_rule_from_string, get_string(j, "tolerance_rule", "fixed"), "tolerance_rule");
  s.scaled_tolerance = get_number(j, "scaled_tolerance", s.scaled_tolerance);
  s.jobs = static_cast<int>(get_integer(j, "jobs", 1));
  cfg.output_dir = get_string(j, "output_dir", cfg.output_dir);
  const long seed = get_integer(j, "seed", 0);
  if (seed < 0) throw ConfigError("seed must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);

  if (j.contains("sizes")) {
    const json& sizes = j.at("sizes");
    if (!sizes.is_array()) throw ConfigError("sizes must be an array of [J, N] pairs");
    for (const json& pair : sizes) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer()) {
        throw ConfigError("each size must be a [J, N] integer pair");
      }
      s.sizes.emplace_back(pair[0].get<Index>(), pair[1].get<Index>());
    }
  }

  SolverParams& p = s.params;
  p.eps_target = manufactured_case(s.case_id).default_eps_target;
  if (j.contains("params")) {
    const json& pj = j.at("params");
    check_keys(pj, {"eps_target", "eps_precond", "delta0", "theta", "nu", "eta0", "tau1", "tau2", "max_iter"}, "params");
    p.eps_target = get_number(pj, "eps_target", p.eps_target);
    p.eps_precond = get_number(pj, "eps_precond", p.eps_precond);
    p.delta0 = get_number(pj, "delta0", p.delta0);
    p.theta = get_number(pj, "theta", p.theta);
    p.nu = get_number(pj, "nu", p.nu);
    p.eta0 = get_number(pj, "eta0", p.eta0);
    for (const char* key : {"tau1", "tau2"}) {
      if (pj.contains(key) && !pj.at(key).is_null()) {
        const double v = get_number(pj, key, 0.0);
        if (!(v > 0.0)) throw ConfigError(std::string(key) + " must be positive");
        (std::string(key) == "tau1" ? p.tau1 : p.tau2) = v;
      }
    }
    p.max_iter = get_integer(pj, "max_iter", p.max_iter);
  }

  if (j.contains("verify")) {
    const json& vj = j.at("verify");
    check_keys(vj, {"trials", "threshold_trials"}, "verify");
    cfg.verify.trials = static_cast<int>(get_integer(vj, "trials", cfg.verify.trials));
    cfg.verify.threshold_trials = static_cast<int>(get_integer(vj, "threshold_trials", cfg.verify.threshold_trials));
  }

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw ConfigError(std::string("malformed config: ") + ex.what());
  }
  return parse_config(j);
}

json config_echo(const ExperimentConfig& cfg) {
  const StudyConfig& s = cfg.study;
  const SolverParams& p = s.params;
  json sizes = json::array();
  for (const auto& [J, N] : s.sizes) sizes.push_back(json::array({J, N}));
  json params = json::object();
  params["eps_target"] = p.eps_target;
  params["eps_precond"] = p.eps_precond;
  params["delta0"] = p.delta0;
  params["theta"] = p.theta;
  params["nu"] = p.nu;
  params["eta0"] = p.eta0;
  params["tau1"] = p.tau1 > 0.0 ? json(p.tau1) : json(nullptr);
  params["tau2"] = p.tau2 > 0.0 ? json(p.tau2) : json(nullptr);
  params["max_iter"] = p.max_iter;
  json out = json::object();
  out["schema_version"] = cfg.schema_version;
  out["case"] = to_string(s.case_id);
  out["scheme"] = to_string(s.scheme);
  out["sizes"] = sizes;
  out["variant"] = to_string(s.variant);
  out["tolerance_rule"] = to_string(s.tolerance_rule);
  out["scaled_tolerance"] = s.scaled_tolerance;
  out["params"] = params;
  out["output_dir"] = cfg.output_dir;
  out["seed"] = cfg.seed;
  out["jobs"] = s.jobs;
  out["verify"] = json{{"trials", cfg.verify.trials}, {"threshold_trials", cfg.verify.threshold_trials}};
  return out;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // keep floats recognisable as floats in JSON
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string dump_json(const json& j, int indent) {
  std::ostringstream os;
  emit(os, j, indent, 0);
  os << "\n";
  return os.str();
}

std::string table_csv(const std::vector<ConvergenceRow>& rows, bool inexact_columns) {
  std::ostringstream os;
  os << "J,N,N_it,err_L2,rate_L2,err_W2G,rate_W2G,rank_W,rank_U";
  if (inexact_columns) os << ",r_inexact,r_naive";
  os << "\n";
  for (const ConvergenceRow& r : rows) {
    os << r.J << ',' << r.N << ',' << r.N_it << ',' << csv_optional(r.err_L2) << ',' << csv_optional(r.rate_L2) << ','
       << csv_optional(r.err_W2G) << ',' << csv_optional(r.rate_W2G) << ',' << r.rank_W << ',' << r.rank_U;
    if (inexact_columns) os << ',' << r.r_inexact << ',' << r.r_naive;
    os << "\n";
  }
  return os.str();
}

std::string trace_csv(const SolveTrace& trace) {
  std::ostringstream os;
  os << "k,rank,delta,eta,res_norm\n";
  for (const TraceRecord& t : trace.records) {
    os << t.k << ',' << t.rank << ',' << format_double(t.delta) << ',' << format_double(t.eta) << ','
       << format_double(t.res_norm) << "\n";
  }
  return os.str();
}

json summary(const ExperimentConfig& cfg, const std::vector<ConvergenceRow>& rows) {
  json out = json::object();
  out["schema_version"] = kSchemaVersion;
  out["config"] = config_echo(cfg);
  json jrows = json::array();
  bool all_ok = true;
  for (const ConvergenceRow& r : rows) {
    json row = json::object();
    row["J"] = r.J;
    row["N"] = r.N;
    row["converged"] = r.converged;
    row["error"] = r.error.empty() ? json(nullptr) : json(r.error);
    row["N_it"] = r.N_it;
    row["residual_evaluations"] = r.residual_evaluations;
    row["err_L2"] = optional_number(r.err_L2);
    row["rate_L2"] = optional_number(r.rate_L2);
    row["err_W2G"] = optional_number(r.err_W2G);
    row["rate_W2G"] = optional_number(r.rate_W2G);
    row["rank_W"] = r.rank_W;
    row["rank_U"] = r.rank_U;
    row["r_inexact"] = r.r_inexact;
    row["r_naive"] = r.r_naive;
    row["final_residual"] = r.trace.final_residual;
    row["eps_target"] = r.eps_target;
    json d = json::object();
    d["gamma1"] = r.gamma1;
    d["gamma2"] = r.gamma2;
    d["gamma1_eps"] = r.derived.gamma1_eps;
    d["gamma2_eps"] = r.derived.gamma2_eps;
    d["rho"] = r.derived.rho;
    d["omega"] = r.derived.omega;
    d["r_p"] = r.r_p;
    d["i1"] = r.i1;
    d["i2"] = r.i2;
    d["lambda"] = r.lambda;
    d["Lambda"] = r.Lambda;
    if (r.error.empty() && r.derived.rho > 0.0 && r.derived.rho < 1.0) {
      try {
        const InexactConstants ic = inexact_constants(cfg.study.params, r.derived);
        d["tau1"] = ic.tau1;
        d["tau2"] = ic.tau2;
        d["B"] = ic.B;
        d["C"] = ic.C;
      } catch (const std::invalid_argument&) {
      }
    }
    row["derived"] = d;
    row["F_norm"] = r.F_norm;
    row["delta0_admissible"] = r.delta0_admissible;
    row["load_relative_change"] = r.load_relative_change;
    row["load_converged"] = r.load_converged;
    jrows.push_back(row);
    all_ok = all_ok && r.error.empty() && r.converged;
  }
  out["rows"] = jrows;
  out["status"] = all_ok ? "ok" : "not_converged";
  return out;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  validate(cfg);
  const std::vector<ConvergenceRow> rows = run_convergence_study(cfg.study);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "table.csv", table_csv(rows, cfg.study.variant == SolverVariant::st_inexact));
  bool ok = true;
  for (const ConvergenceRow& r : rows) {
    write_file(dir / ("trace_" + std::to_string(r.J) + "_" + std::to_string(r.N) + ".csv"), trace_csv(r.trace));
    log << "J=" << r.J << " N=" << r.N << " N_it=" << r.N_it << " rank_W=" << r.rank_W;
    if (r.err_L2) log << " L2=" << format_double(*r.err_L2);
    if (r.err_W2G) log << " W2G=" << format_double(*r.err_W2G);
    log << " t=" << r.seconds << "s";
    if (!r.error.empty()) log << " error: " << r.error;
    else if (!r.converged) log << " (not converged)";
    log << "\n";
    ok = ok && r.error.empty() && r.converged;
  }
  write_file(dir / "summary.json", dump_json(summary(cfg, rows)));
  return ok ? kExitOk : kExitNotConverged;
}

std::string error_report(const std::string& kind, const std::string& message) {
  json j = json::object();
  j["status"] = "error";
  j["kind"] = kind;
  j["message"] = message;
  return j.dump();
}

}  // namespace lrrte
