#include "becpf/experiments.hpp"

#include "becpf/errors.hpp"
#include "becpf/fugacity.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace becpf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* const version = "0.1.0";

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T get(const json& obj, const std::string& where, const std::string& key) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

BallOrder parse_order(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": expected [radial, polar, azimuthal]");
  BallOrder o;
  try {
    o = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
  } catch (const json::exception&) {
    throw ConfigError(where + ": node counts must be integers");
  }
  if (o.radial < 1 || o.polar < 1 || o.azimuthal < 1) throw ConfigError(where + ": node counts must be positive");
  return o;
}

json order_json(const BallOrder& o) { return json::array({o.radial, o.polar, o.azimuthal}); }

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json canonical_json(const ExperimentConfig& c) {
  json model{{"d", c.model.d}, {"beta", c.model.beta}, {"L", c.model.L}};
  if (c.model.N) model["N"] = *c.model.N;
  if (c.model.rho) model["rho"] = *c.model.rho;
  json bumps = json::array();
  for (const Bump& b : c.f.bumps())
    bumps.push_back({{"a", b.a}, {"x0", std::vector<double>(b.x0.data(), b.x0.data() + b.x0.size())}, {"r", b.r}});
  json quad{{"assembly_order", order_json(c.assembly.order)},
            {"limit_order", order_json(c.limit.order)},
            {"rank_tol", c.assembly.rank_tol},
            {"trace_tol", c.assembly.trace_tol}};
  quad["check_order"] = c.limit.check ? order_json(*c.limit.check) : json(nullptr);
  return {{"model", model},
          {"f", {{"bumps", bumps}}},
          {"sweep", c.sweep},
          {"quadrature", quad},
          {"contour",
           {{"rel_tol", c.contour.rel_tol},
            {"max_nodes", c.contour.max_nodes},
            {"min_nodes", c.contour.min_nodes},
            {"factor_top_pole", c.contour.factor_top_pole}}},
          {"sampling",
           {{"draws", c.draws},
            {"seed", c.seed},
            {"cell_diameter", c.sampler.cell_diameter},
            {"eigen_floor", c.sampler.eigen_floor}}},
          {"output_dir", c.output_dir.string()}};
}

void validate_physics(ExperimentConfig& c) {
  try {
    c.model.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (c.f.dim() != c.model.d) throw ConfigError("f: bump centres must have dimension model.d");
  const double rho_c = critical_density(c.model.d, c.model.beta);
  if (!(c.model.density() > rho_c))
    throw ConfigError("model: density " + format_double(c.model.density()) + " is not above rho_c = " +
                      format_double(rho_c));
  if (c.sweep.empty()) throw ConfigError("sweep: needs at least one L");
  for (double L : c.sweep) {
    if (!(L > 0.0)) throw ConfigError("sweep: L must be positive");
    try {
      require_support_inside(c.f, c.model.with_L(L));
    } catch (const Error& e) {
      throw ConfigError("sweep: L = " + format_double(L) + ": " + e.what());
    }
  }
  try {
    require_support_inside(c.f, c.model);
  } catch (const Error& e) {
    throw ConfigError(std::string("model.L: ") + e.what());
  }
  if (c.draws < 1) throw ConfigError("sampling.draws must be positive");
  if (!(c.sampler.cell_diameter > 0.0) || c.sampler.cell_diameter > 0.25)
    throw ConfigError("sampling.cell_diameter must lie in (0, 0.25]");
}

std::string csv_line(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s + '\n';
}

// Writes the same table to a file in the output directory and to out.
class Table {
public:
  Table(std::string name, std::string header) : name_(std::move(name)), body_(std::move(header) + '\n') {}
  void row(const std::vector<double>& v) { body_ += csv_line(v); }
  void raw(const std::string& line) {
    body_ += line;
    if (line.empty() || line.back() != '\n') body_ += '\n';
  }
  const std::string& name() const { return name_; }
  void write(const fs::path& dir) const {
    std::ofstream os(dir / name_, std::ios::binary);
    os << body_;
    if (!os) throw ConfigError("cannot write " + (dir / name_).string());
  }
  const std::string& body() const { return body_; }

private:
  std::string name_;
  std::string body_;
};

std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json read_manifest(const fs::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) return json::object();
  try {
    return json::parse(is);
  } catch (const json::exception&) {
    return json::object();
  }
}

void write_manifest(const fs::path& dir, const json& m) {
  std::ofstream os(dir / "manifest.json");
  os << m.dump(2) << '\n';
}

std::vector<Table> fugacity_suite(const ExperimentConfig& c) {
  Table t("fugacity.csv", "L,N,rho_N,z0,ztilde0,residual0,residual_tilde,gtilde0,overlap,p0,z0_ratio");
  const double rho_c = critical_density(c.model.d, c.model.beta);
  const auto def = assemble_deformation(c.f, c.model, c.assembly);
  const TopEigenpair top = top_deformed_eigenpair(def);
  const std::int64_t N = c.model.particle_count();
  const FugacityPair fp = solve_fugacities(def, N, top);
  const double vol = c.model.volume();
  t.row({c.model.L, double(N), double(N) / vol, fp.z0, fp.ztilde0, fp.residual0, fp.residual_tilde, top.value,
         top.overlap, fp.z0 / (1.0 - fp.z0), vol * (1.0 - fp.z0) * (c.model.density() - rho_c)});
  return {t};
}

std::vector<Table> laplace_suite(const ExperimentConfig& c, const SuiteOverrides& o) {
  ModelParams p = c.model;
  if (o.N) {
    if (*o.N < 1) throw ConfigError("--N must be positive");
    p.N = *o.N;
    p.rho.reset();
  }
  Table t("laplace_finite.csv",
          "L,N,z0,ztilde0,value,imag_residue,log_fugacity_factor,log_det_ratio,log_contour_plain,"
          "log_contour_deformed,nodes_plain,nodes_deformed");
  const auto def = assemble_deformation(c.f, p, c.assembly);
  const FiniteLaplaceResult r = finite_laplace(def, p.particle_count(), c.contour);
  t.row({p.L, double(r.N), r.z0, r.ztilde0, r.value, r.imag_residue, r.log_fugacity_factor, r.log_det_ratio,
         r.log_contour_plain, r.log_contour_deformed, double(r.nodes_plain), double(r.nodes_deformed)});
  return {t};
}

std::vector<Table> converge_suite(const ExperimentConfig& c) {
  const ConvergenceTable table = convergence_sweep(c.model, c.f, c.sweep, {c.assembly, c.limit, c.contour});
  Table t("converge.csv",
          "L,N,rho_N,finite,limit,limit_matched,gap,rel_gap,gap_matched,rel_gap_matched,z0,ztilde0,gtilde0,"
          "overlap,gap_window_ratio,z0_ratio,ztilde_ratio,det_ratio_factor,lemma9_plain_residual,"
          "lemma9_plain_bound,lemma9_deformed_residual,imag_residue");
  for (const SweepRow& r : table.rows)
    t.row({r.L, double(r.N), r.rho_N, r.finite.value, r.limit, r.limit_matched, r.gap, r.rel_gap, r.gap_matched,
           r.rel_gap_matched, r.fugacity.z0, r.fugacity.ztilde0, r.gtilde0, r.overlap, r.gap_window_ratio,
           r.z0_ratio, r.ztilde_ratio, r.det_ratio_factor, r.lemma9.plain_residual(), r.lemma9.plain_bound,
           r.lemma9.deformed_residual(), r.finite.imag_residue});
  Table lim("limit.csv", "rho_excess,condensate_exponent,log_boson_det,value,nodes,exponent_delta,log_det_delta");
  const LimitLaplaceResult& l = table.limit;
  lim.row({l.rho_excess, l.condensate_exponent, l.log_boson_det, l.value, double(l.nodes), l.exponent_delta,
           l.log_det_delta});
  return {t, lim};
}

std::vector<Table> sample_suite(const ExperimentConfig& c, const SuiteOverrides& o) {
  const long draws = o.draws.value_or(c.draws);
  const std::uint64_t seed = o.seed.value_or(c.seed);
  if (draws < 1) throw ConfigError("--draws must be positive");
  const FieldSampler sampler(c.model, c.f.bounding_box(), c.sampler);
  const auto samples = sampler.draw_many(seed, static_cast<std::uint64_t>(draws));
  std::string header = "draw_id";
  const char* names[] = {"x", "y", "z"};
  for (int a = 0; a < c.model.d; ++a) header += ',' + (c.model.d <= 3 ? std::string(names[a]) : "x" + std::to_string(a + 1));
  Table pts("points.csv", header);
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (Eigen::Index j = 0; j < samples[i].size(); ++j) {
      std::vector<double> row{double(i)};
      for (int a = 0; a < c.model.d; ++a) row.push_back(samples[i].points(a, j));
      pts.row(row);
    }
  const Estimate lap = empirical_laplace(samples, c.f);
  const Estimate in = empirical_intensity(samples);
  const double target = limit_laplace(c.model, c.f, c.limit).value;
  Table sum("sample_summary.csv", "quantity,mean,se,analytic,z_score");
  const double rho = c.model.density();
  sum.raw("laplace," + csv_line({lap.mean, lap.std_error, target, (lap.mean - target) / lap.std_error}));
  sum.raw("intensity," + csv_line({in.mean, in.std_error, rho, (in.mean - rho) / in.std_error}));
  return {pts, sum};
}

std::string short_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

} // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ExperimentConfig reference_config() {
  ExperimentConfig c;
  c.canonical = canonical_json(c).dump();
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw ConfigError("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                      e.what());
  }
  reject_unknown(j, "config", {"model", "f", "sweep", "quadrature", "contour", "sampling", "output_dir"});
  ExperimentConfig c;
  if (!j.contains("model")) throw ConfigError("config: missing 'model'");

  const json& m = j["model"];
  reject_unknown(m, "model", {"d", "beta", "L", "rho", "rho_over_rhoc", "N"});
  c.model = ModelParams{};
  if (m.contains("d")) c.model.d = get<int>(m, "model", "d");
  if (m.contains("beta")) c.model.beta = get<double>(m, "model", "beta");
  c.model.L = m.contains("L") ? get<double>(m, "model", "L") : 12.0 * std::sqrt(c.model.beta);
  const int given = int(m.contains("rho")) + int(m.contains("rho_over_rhoc")) + int(m.contains("N"));
  if (given != 1) throw ConfigError("model: give exactly one of rho, rho_over_rhoc, N");
  if (c.model.d < 3) throw ConfigError("model.d must be at least 3");
  if (!(c.model.beta > 0.0)) throw ConfigError("model.beta must be positive");
  if (m.contains("rho")) c.model.rho = get<double>(m, "model", "rho");
  if (m.contains("rho_over_rhoc"))
    c.model.rho = get<double>(m, "model", "rho_over_rhoc") * critical_density(c.model.d, c.model.beta);
  if (m.contains("N")) c.model.N = get<std::int64_t>(m, "model", "N");

  if (j.contains("f")) {
    reject_unknown(j["f"], "f", {"bumps"});
    std::vector<Bump> bumps;
    const json& bs = j["f"].value("bumps", json::array());
    if (!bs.is_array()) throw ConfigError("f.bumps: expected an array");
    for (const json& b : bs) {
      reject_unknown(b, "f.bumps[]", {"a", "x0", "r"});
      Bump bump;
      bump.a = b.contains("a") ? get<double>(b, "f.bumps[]", "a") : 1.0;
      bump.r = b.contains("r") ? get<double>(b, "f.bumps[]", "r") : 1.0;
      const auto x0 = b.contains("x0") ? get<std::vector<double>>(b, "f.bumps[]", "x0") : std::vector<double>(c.model.d, 0.0);
      bump.x0 = Eigen::Map<const Vec>(x0.data(), Eigen::Index(x0.size()));
      if (!(bump.a >= 0.0) || !(bump.r > 0.0)) throw ConfigError("f.bumps[]: need a >= 0 and r > 0");
      if (int(x0.size()) != c.model.d) throw ConfigError("f.bumps[].x0: dimension must equal model.d");
      bumps.push_back(bump);
    }
    try {
      c.f = TestFunction(c.model.d, bumps);
    } catch (const Error& e) {
      throw ConfigError(std::string("f: ") + e.what());
    }
  } else {
    c.f = TestFunction::single(c.model.d);
  }

  if (j.contains("sweep")) c.sweep = get<std::vector<double>>(j, "config", "sweep");

  if (j.contains("quadrature")) {
    const json& q = j["quadrature"];
    reject_unknown(q, "quadrature", {"assembly_order", "limit_order", "check_order", "rank_tol", "trace_tol"});
    if (q.contains("assembly_order")) c.assembly.order = parse_order(q["assembly_order"], "quadrature.assembly_order");
    if (q.contains("limit_order")) c.limit.order = parse_order(q["limit_order"], "quadrature.limit_order");
    if (q.contains("check_order")) {
      if (q["check_order"].is_null())
        c.limit.check.reset();
      else
        c.limit.check = parse_order(q["check_order"], "quadrature.check_order");
    }
    if (q.contains("rank_tol")) c.assembly.rank_tol = get<double>(q, "quadrature", "rank_tol");
    if (q.contains("trace_tol")) c.assembly.trace_tol = get<double>(q, "quadrature", "trace_tol");
    if (!(c.assembly.rank_tol > 0.0) || !(c.assembly.trace_tol > 0.0))
      throw ConfigError("quadrature: tolerances must be positive");
  }

  if (j.contains("contour")) {
    const json& q = j["contour"];
    reject_unknown(q, "contour", {"rel_tol", "max_nodes", "min_nodes", "factor_top_pole"});
    if (q.contains("rel_tol")) c.contour.rel_tol = get<double>(q, "contour", "rel_tol");
    if (q.contains("max_nodes")) c.contour.max_nodes = get<int>(q, "contour", "max_nodes");
    if (q.contains("min_nodes")) c.contour.min_nodes = get<int>(q, "contour", "min_nodes");
    if (q.contains("factor_top_pole")) c.contour.factor_top_pole = get<bool>(q, "contour", "factor_top_pole");
    if (!(c.contour.rel_tol > 0.0) || c.contour.max_nodes < 2 || c.contour.min_nodes < 0)
      throw ConfigError("contour: need rel_tol > 0, max_nodes >= 2, min_nodes >= 0");
  }

  if (j.contains("sampling")) {
    const json& s = j["sampling"];
    reject_unknown(s, "sampling", {"draws", "seed", "cell_diameter", "eigen_floor"});
    if (s.contains("draws")) c.draws = get<long>(s, "sampling", "draws");
    if (s.contains("seed")) c.seed = get<std::uint64_t>(s, "sampling", "seed");
    if (s.contains("cell_diameter")) c.sampler.cell_diameter = get<double>(s, "sampling", "cell_diameter");
    if (s.contains("eigen_floor")) c.sampler.eigen_floor = get<double>(s, "sampling", "eigen_floor");
  }

  if (j.contains("output_dir")) c.output_dir = get<std::string>(j, "config", "output_dir");

  validate_physics(c);
  c.canonical = canonical_json(c).dump();
  return c;
}

ExperimentConfig load_config(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot open config " + file.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

AcceptanceConfig acceptance_config(const ExperimentConfig& c) {
  AcceptanceConfig a;
  a.model = c.model;
  a.f = c.f;
  a.sweep = c.sweep;
  a.assembly = c.assembly;
  a.limit = c.limit;
  a.contour = c.contour;
  a.sampler = c.sampler;
  a.draws = c.draws;
  a.seed = c.seed;
  return a;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalGuardError*>(&e) || dynamic_cast<const QuadratureError*>(&e) ||
      dynamic_cast<const SingularInputError*>(&e))
    return exit_numerical;
  if (dynamic_cast<const Error*>(&e)) return exit_config;
  return exit_numerical;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"fugacity", "laplace-finite", "converge", "sample", "verify"};
  return names;
}

int run_suite(const ExperimentConfig& c, const std::string& suite, const SuiteOverrides& o, std::ostream& out,
              std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const std::string started = timestamp();
  std::vector<Table> tables;
  json extra = json::object();
  int code = exit_pass;
  try {
    if (suite == "fugacity") {
      tables = fugacity_suite(c);
    } else if (suite == "laplace-finite") {
      tables = laplace_suite(c, o);
      if (o.N) extra["N"] = *o.N;
    } else if (suite == "converge") {
      tables = converge_suite(c);
    } else if (suite == "sample") {
      tables = sample_suite(c, o);
      extra["draws"] = o.draws.value_or(c.draws);
      extra["seed"] = o.seed.value_or(c.seed);
    } else if (suite == "verify") {
      std::vector<int> ids = o.criteria;
      if (ids.empty())
        for (int i = 1; i <= acceptance_criterion_count; ++i) ids.push_back(i);
      const AcceptanceConfig ac = acceptance_config(c);
      Table checks("verify.csv", "criterion,check,measured,relation,threshold,passed");
      json criteria = json::array();
      for (int id : ids) {
        if (id < 1 || id > acceptance_criterion_count) throw ConfigError("criterion id out of range");
        const CriterionResult r = run_criterion(id, ac);
        out << r.summary() << '\n';
        json jc{{"id", id}, {"title", r.title}, {"passed", r.passed()}, {"error", r.error}, {"checks", json::array()}};
        for (const Check& k : r.checks) {
          out << "    " << (k.passed ? "ok   " : "FAIL ") << k.name << ": " << short_double(k.measured) << ' '
              << k.relation << ' ' << short_double(k.threshold) << '\n';
          checks.raw(std::to_string(id) + ",\"" + k.name + "\"," + format_double(k.measured) + ',' + k.relation + ',' +
                     format_double(k.threshold) + ',' + (k.passed ? "1" : "0"));
          jc["checks"].push_back({{"name", k.name},
                                  {"measured", k.measured},
                                  {"relation", k.relation},
                                  {"threshold", k.threshold},
                                  {"passed", k.passed}});
        }
        if (!r.error.empty()) out << "    error: " << r.error << '\n';
        jc["seconds"] = r.seconds;
        criteria.push_back(jc);
        if (!r.passed()) code = exit_acceptance_fail;
      }
      tables = {checks};
      extra["criteria"] = criteria;
    } else {
      err << "unknown suite '" << suite << "'\n";
      return exit_config;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = exit_code_for(e);
  }

  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec) {
    err << "error: cannot create " << c.output_dir.string() << ": " << ec.message() << '\n';
    return exit_config;
  }
  json files = json::array();
  for (const Table& t : tables) {
    t.write(c.output_dir);
    files.push_back(t.name());
    if (suite != "verify" && t.name() != "points.csv") out << t.body();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json m = read_manifest(c.output_dir);
  m["version"] = version;
  m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  m["compiler"] = __VERSION__;
  json entry{{"config", json::parse(c.canonical)},
             {"files", files},
             {"exit_code", code},
             {"started", started},
             {"seconds", secs},
             {"rounding", "N = round(rho L^d)"}};
  entry.update(extra);
  m["suites"][suite] = entry;
  write_manifest(c.output_dir, m);
  return code;
}

int report(const fs::path& dir, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(dir)) {
    err << "error: " << dir.string() << " is not a directory\n";
    return exit_config;
  }
  if (!fs::exists(dir / "manifest.json")) {
    err << "error: no manifest.json in " << dir.string() << "\n";
    return exit_config;
  }
  const json m = read_manifest(dir);
  if (!m.contains("suites")) {
    err << "error: manifest in " << dir.string() << " is unreadable\n";
    return exit_config;
  }
  const json& suites = m["suites"];
  bool any_fail = false;
  out << "suites\n";
  for (const std::string& s : suite_names()) {
    if (!suites.contains(s)) {
      out << "  " << s << ": UNTESTED\n";
      continue;
    }
    const json& e = suites[s];
    bool missing = false;
    for (const auto& f : e["files"]) missing |= !fs::exists(dir / f.get<std::string>());
    const int code = e.value("exit_code", exit_numerical);
    any_fail |= code != exit_pass || missing;
    out << "  " << s << ": " << (code == exit_pass && !missing ? "PASS" : "FAIL") << " (exit " << code << ", "
        << short_double(e.value("seconds", 0.0)) << " s" << (missing ? ", artifacts missing" : "") << ")\n";
  }
  out << "acceptance criteria\n";
  std::map<int, json> seen;
  if (suites.contains("verify") && suites["verify"].contains("criteria"))
    for (const json& c : suites["verify"]["criteria"]) seen[c["id"].get<int>()] = c;
  for (int id = 1; id <= acceptance_criterion_count; ++id) {
    auto it = seen.find(id);
    if (it == seen.end()) {
      out << "  " << id << ". UNTESTED " << acceptance_title(id) << '\n';
      continue;
    }
    const json& c = it->second;
    const bool pass = c["passed"].get<bool>();
    any_fail |= !pass;
    out << "  " << id << ". " << (pass ? "PASS" : "FAIL") << ' ' << c["title"].get<std::string>() << '\n';
    for (const json& k : c["checks"])
      out << "       " << (k["passed"].get<bool>() ? "ok   " : "FAIL ") << k["name"].get<std::string>() << ": "
          << short_double(k["measured"].get<double>()) << ' ' << k["relation"].get<std::string>() << ' '
          << short_double(k["threshold"].get<double>()) << '\n';
    if (!c["error"].get<std::string>().empty()) out << "       error: " << c["error"].get<std::string>() << '\n';
  }
  return any_fail ? exit_acceptance_fail : exit_pass;
}

} // namespace becpf
