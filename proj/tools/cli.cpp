#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#ifndef AADJ_VERSION
#define AADJ_VERSION "unknown"
#endif

namespace aadj::cli {

namespace {

const std::vector<double> kShapeHLevels{4e-2, 2e-2, 1e-2};

// ---------------------------------------------------------------------------
// Schema helpers

[[noreturn]] void fail(const std::string& source, const std::string& field, const std::string& msg) {
  throw ScenarioError(source + ": field '" + field + "': " + msg);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const Json& obj, std::initializer_list<const char*> allowed, const std::string& source,
                    const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(source, join(prefix, key), "unknown field");
  }
}

const Json& need(const Json& obj, const char* key, const std::string& source, const std::string& prefix) {
  if (!obj.contains(key)) fail(source, join(prefix, key), "missing required field");
  return obj.at(key);
}

double number(const Json& v, const std::string& source, const std::string& field) {
  if (!v.is_number()) fail(source, field, "expected a number, got " + std::string(v.type_name()));
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(source, field, "expected a finite number");
  return d;
}

long long integer(const Json& v, const std::string& source, const std::string& field) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  fail(source, field, "expected an integer, got " + v.dump());
}

std::string string(const Json& v, const std::string& source, const std::string& field) {
  if (!v.is_string()) fail(source, field, "expected a string, got " + std::string(v.type_name()));
  return v.get<std::string>();
}

std::vector<double> numbers(const Json& v, const std::string& source, const std::string& field,
                            std::optional<std::size_t> length = std::nullopt) {
  if (!v.is_array()) fail(source, field, "expected an array of numbers");
  if (length && v.size() != *length) {
    fail(source, field, "expected " + std::to_string(*length) + " numbers, got " + std::to_string(v.size()));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], source, field + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> h_levels(const Json& doc, const std::string& source, const std::vector<double>& fallback) {
  if (!doc.contains("h_levels")) return fallback;
  std::vector<double> hs = numbers(doc.at("h_levels"), source, "h_levels");
  if (hs.size() < 2) fail(source, "h_levels", "need at least two step sizes");
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(hs[i] > 0.0)) fail(source, "h_levels", "step sizes must be positive");
    for (std::size_t j = 0; j < i; ++j) {
      if (hs[j] == hs[i]) fail(source, "h_levels", "step sizes must be distinct");
    }
  }
  return hs;
}

std::uint64_t seed(const Json& doc, const std::string& source) {
  if (!doc.contains("seed")) return 1;
  const long long s = integer(doc.at("seed"), source, "seed");
  if (s < 0) fail(source, "seed", "expected a non-negative integer");
  return static_cast<std::uint64_t>(s);
}

Json matrix_json(const SymMatrix& m) {
  Json a = Json::array();
  for (double v : m.row_major()) a.push_back(v);
  return a;
}

Json field_json(const fields::FieldSpec& f) {
  Json params = Json::array();
  for (double p : f.params) params.push_back(p);
  return Json{{"name", f.name}, {"params", params}};
}

shape::Variant parse_variant(const std::string& v, const std::string& source) {
  if (v == "corrected") return shape::Variant::kCorrected;
  if (v == "as-printed") return shape::Variant::kAsPrinted;
  fail(source, "variant", "expected \"corrected\" or \"as-printed\", got \"" + v + "\"");
}

// ---------------------------------------------------------------------------
// Scenario kinds

Scenario parse_quad(const Json& doc, const std::string& source) {
  reject_unknown(doc, {"kind", "id", "dim", "Q0", "Q1", "A0", "A1", "case", "tau", "h_levels", "seed"}, source, "");
  Scenario sc;
  sc.kind = Kind::kQuad;
  sc.id = doc.contains("id") ? string(doc.at("id"), source, "id") : "custom";
  const long long dim = integer(need(doc, "dim", source, ""), source, "dim");
  if (dim < 1 || dim > 64) fail(source, "dim", "expected 1 <= dim <= 64");
  const auto d = static_cast<std::size_t>(dim);
  auto mat = [&](const char* key) {
    const std::vector<double> v = numbers(need(doc, key, source, ""), source, key, d * d);
    return SymMatrix(d, v);
  };
  const SymMatrix q0 = mat("Q0"), q1 = mat("Q1"), a0 = mat("A0"), a1 = mat("A1");
  const std::string c = string(need(doc, "case", source, ""), source, "case");
  if (c != "a" && c != "b") fail(source, "case", "expected \"a\" or \"b\", got \"" + c + "\"");
  const double tau = number(need(doc, "tau", source, ""), source, "tau");
  if (!(tau > 0.0)) fail(source, "tau", "expected a positive number");
  sc.h_levels = h_levels(doc, source, kDefaultHLevels);
  sc.seed = seed(doc, source);
  for (double h : sc.h_levels) {
    if (h > tau) fail(source, "h_levels", "step " + std::to_string(h) + " exceeds tau");
  }
  try {
    sc.path.emplace(q0, q1, a0, a1, tau, c == "a" ? QuadCase::kPositiveObjective : QuadCase::kPositiveConstraint);
  } catch (const PreconditionError& e) {
    fail(source, "case", e.what());
  }
  return sc;
}

fields::FieldSpec parse_field(const Json& doc, const char* key, const std::string& source) {
  const Json& v = need(doc, key, source, "");
  if (!v.is_object()) fail(source, key, "expected an object {\"name\", \"params\"}");
  reject_unknown(v, {"name", "params"}, source, key);
  fields::FieldSpec spec;
  spec.name = string(need(v, "name", source, key), source, join(key, "name"));
  if (v.contains("params")) spec.params = numbers(v.at("params"), source, join(key, "params"));
  return spec;
}

Scenario parse_shape(const Json& doc, const std::string& source) {
  reject_unknown(doc, {"kind", "id", "mesh_n", "rho", "gamma", "f", "u_r", "X", "h_levels", "seed", "inner_opt",
                       "variant"},
                 source, "");
  Scenario sc;
  sc.kind = Kind::kShape;
  sc.id = doc.contains("id") ? string(doc.at("id"), source, "id") : "custom";
  shape::ShapeScenario s;
  s.id = sc.id;
  const long long n = integer(need(doc, "mesh_n", source, ""), source, "mesh_n");
  if (n < 2 || n > 1024) fail(source, "mesh_n", "expected 2 <= mesh_n <= 1024");
  s.mesh_n = static_cast<int>(n);
  s.rho_id = string(need(doc, "rho", source, ""), source, "rho");
  try {
    fem::nonlinearity(s.rho_id);
  } catch (const PreconditionError& e) {
    fail(source, "rho", e.what());
  }
  s.gamma = number(need(doc, "gamma", source, ""), source, "gamma");
  if (!(s.gamma > 0.0)) fail(source, "gamma", "expected a positive number");

  s.f_spec = parse_field(doc, "f", source);
  s.ur_spec = parse_field(doc, "u_r", source);
  s.x_spec = parse_field(doc, "X", source);
  auto check = [&](const char* key, auto&& make) {
    try {
      make();
    } catch (const PreconditionError& e) {
      fail(source, key, e.what());
    }
  };
  check("f", [&] { fields::make_scalar(s.f_spec); });
  check("u_r", [&] { fields::make_scalar(s.ur_spec); });
  check("X", [&] { fields::make_vector(s.x_spec); });

  if (doc.contains("inner_opt")) {
    const Json& io = doc.at("inner_opt");
    if (!io.is_object()) fail(source, "inner_opt", "expected an object");
    reject_unknown(io, {"max_iters", "grad_tol", "memory"}, source, "inner_opt");
    if (io.contains("max_iters")) {
      const long long v = integer(io.at("max_iters"), source, "inner_opt.max_iters");
      if (v < 1) fail(source, "inner_opt.max_iters", "expected a positive integer");
      s.inner.max_iters = static_cast<int>(v);
    }
    if (io.contains("grad_tol")) {
      s.inner.grad_tol = number(io.at("grad_tol"), source, "inner_opt.grad_tol");
      if (!(s.inner.grad_tol > 0.0)) fail(source, "inner_opt.grad_tol", "expected a positive number");
    }
    if (io.contains("memory")) {
      const long long v = integer(io.at("memory"), source, "inner_opt.memory");
      if (v < 1) fail(source, "inner_opt.memory", "expected a positive integer");
      s.inner.memory = static_cast<int>(v);
    }
  }
  if (doc.contains("variant")) sc.variant = parse_variant(string(doc.at("variant"), source, "variant"), source);
  sc.h_levels = h_levels(doc, source, kShapeHLevels);
  sc.seed = seed(doc, source);

  s.materialise();
  const double lip = fem::lipschitz_estimate(*s.mesh, s.x);
  for (double h : sc.h_levels) {
    if (!(h * lip < 1.0)) fail(source, "h_levels", "step " + std::to_string(h) + " violates t*Lip(X) < 1");
  }
  sc.shape = std::move(s);
  return sc;
}

Scenario builtin_quad(const quad::NamedPath& named) {
  Scenario sc;
  sc.kind = Kind::kQuad;
  sc.id = named.id;
  sc.path = named.path;
  sc.h_levels = kDefaultHLevels;
  return sc;
}

Scenario builtin_shape() {
  Scenario sc;
  sc.kind = Kind::kShape;
  sc.id = "square-basic";
  sc.shape = shape::square_basic();
  sc.h_levels = kShapeHLevels;
  return sc;
}

// ---------------------------------------------------------------------------
// JSON output

void write_value(std::ostream& os, const Json& v, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (const auto& [key, child] : v.items()) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(key).dump() << ": ";
        write_value(os, child, indent + 2);
      }
      os << '\n' << close << '}';
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) os << ",\n";
        os << pad;
        write_value(os, v[i], indent + 2);
      }
      os << '\n' << close << ']';
      return;
    }
    case Json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) {
        os << "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", d);
      os << buf;
      return;
    }
    default:
      os << v.dump();
  }
}

Json audit_json(const AuditResult& a) {
  Json series = Json::array();
  for (double s : a.series) series.push_back(s);
  return Json{{"pass", a.pass}, {"value", a.value}, {"detail", a.detail}, {"series", series}};
}

// ---------------------------------------------------------------------------
// Subcommands

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void emit(const Json& doc, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    write_json(out, doc);
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw Error("cannot open '" + out_path + "' for writing");
  write_json(f, doc);
  if (!f) throw Error("failed writing '" + out_path + "'");
}

void emit_csv(const DerivativeReport& report, const std::string& csv_path) {
  if (csv_path.empty()) return;
  std::ofstream f(csv_path);
  if (!f) throw Error("cannot open '" + csv_path + "' for writing");
  write_fd_csv(f, report);
}

std::string summary(bool pass, const DerivativeReport& r, double tol) {
  std::ostringstream os;
  os.precision(6);
  os << (pass ? "PASS" : "FAIL") << " dg0_formula=" << r.dg0_formula << " richardson=" << r.richardson
     << " rel_error=" << r.rel_error << " (tol " << tol << ")";
  for (const auto& [name, a] : r.audits) {
    if (!a.pass) os << " audit " << name << " failed";
  }
  return os.str();
}

struct Options {
  std::string scenario;
  std::string out_path;
  std::string csv_path;
  std::string variant;
  std::string hypothesis;
};

int run_verify(Kind want, const Options& opt, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  Scenario sc = load_scenario(opt.scenario);
  if (sc.kind != want) {
    throw ScenarioError("'" + opt.scenario + "' is a " + (sc.kind == Kind::kQuad ? "quad" : "shape") +
                        " scenario; use the matching subcommand");
  }
  const VerifyOptions vo{threads_from_env(), true};
  DerivativeReport report;
  double tol = kQuadTolerance;
  if (sc.kind == Kind::kQuad) {
    const quad::QuadAdapter adapter(*sc.path, sc.seed);
    report = verify(adapter, sc.h_levels, vo);
  } else {
    if (!opt.variant.empty()) sc.variant = parse_variant(opt.variant, "--variant");
    const shape::ShapeAdapter adapter(*sc.shape, sc.seed, sc.variant);
    report = verify(adapter, sc.h_levels, vo);
    tol = kShapeTolerance;
  }
  const bool pass = report.rel_error <= tol && all_audits_pass(report.audits);
  emit(report_json(sc, report, seconds_since(t0)), opt.out_path, out);
  emit_csv(report, opt.csv_path);
  (opt.out_path.empty() ? err : out) << summary(pass, report, tol) << '\n';
  return pass ? kExitPass : kExitFail;
}

int run_audit(const Options& opt, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario sc = load_scenario(opt.scenario);
  AuditResult a;
  if (sc.kind == Kind::kQuad) {
    a = quad::QuadAdapter(*sc.path, sc.seed).audit(opt.hypothesis);
  } else {
    a = shape::ShapeAdapter(*sc.shape, sc.seed, sc.variant).audit(opt.hypothesis);
  }
  Json doc;
  doc["scenario"] = sc.echo();
  doc["hypothesis"] = opt.hypothesis;
  const Json result = audit_json(a);
  for (const auto& [key, value] : result.items()) doc[key] = value;
  doc["version"] = version();
  doc["elapsed_s"] = seconds_since(t0);
  emit(doc, opt.out_path, out);
  return a.pass ? kExitPass : kExitFail;
}

}  // namespace

const char* version() { return AADJ_VERSION; }

Json Scenario::echo() const {
  Json j;
  if (kind == Kind::kQuad) {
    j["kind"] = "quad";
    j["id"] = id;
    j["dim"] = path->dim();
    j["Q0"] = matrix_json(path->q0());
    j["Q1"] = matrix_json(path->q1());
    j["A0"] = matrix_json(path->a0());
    j["A1"] = matrix_json(path->a1());
    j["case"] = path->which() == QuadCase::kPositiveObjective ? "a" : "b";
    j["tau"] = path->tau();
  } else {
    j["kind"] = "shape";
    j["id"] = id;
    j["mesh_n"] = shape->mesh_n;
    j["rho"] = shape->rho_id;
    j["gamma"] = shape->gamma;
    j["f"] = field_json(shape->f_spec);
    j["u_r"] = field_json(shape->ur_spec);
    j["X"] = field_json(shape->x_spec);
    j["inner_opt"] = Json{{"max_iters", shape->inner.max_iters},
                          {"grad_tol", shape->inner.grad_tol},
                          {"memory", shape->inner.memory}};
    j["variant"] = shape::to_string(variant);
  }
  Json hs = Json::array();
  for (double h : h_levels) hs.push_back(h);
  j["h_levels"] = hs;
  j["seed"] = seed;
  return j;
}

Scenario parse_scenario(const Json& doc, const std::string& source) {
  if (!doc.is_object()) throw ScenarioError(source + ": top level must be a JSON object");
  const std::string kind = string(need(doc, "kind", source, ""), source, "kind");
  if (kind == "quad") return parse_quad(doc, source);
  if (kind == "shape") return parse_shape(doc, source);
  fail(source, "kind", "expected \"quad\" or \"shape\", got \"" + kind + "\"");
}

Scenario load_scenario(const std::string& id_or_file) {
  for (const auto& named : quad::builtin_paths()) {
    if (named.id == id_or_file) return builtin_quad(named);
  }
  if (id_or_file == "square-basic") return builtin_shape();
  std::ifstream f(id_or_file);
  if (!f) throw ScenarioError("unknown scenario id or unreadable file: '" + id_or_file + "'");
  Json doc;
  try {
    doc = Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw ScenarioError(id_or_file + ": invalid JSON: " + e.what());
  }
  return parse_scenario(doc, id_or_file);
}

std::vector<std::string> list_scenarios() {
  std::vector<std::string> out;
  for (const auto& named : quad::builtin_paths()) out.push_back("quad  " + named.id + "  " + named.description);
  out.push_back(
      "shape square-basic  unit square, n=32, rho=2u+sin u, f=1, u_r=x*y, gamma=1e-2, X=(x(1-x)y(1-y), 0)");
  return out;
}

void write_json(std::ostream& os, const Json& doc) {
  write_value(os, doc, 0);
  os << '\n';
}

Json report_json(const Scenario& scenario, const DerivativeReport& report, double elapsed_s) {
  Json j;
  j["scenario"] = scenario.echo();
  j["dg0_formula"] = report.dg0_formula;
  j["g0"] = report.g0;
  Json table = Json::array();
  for (const FdRow& row : report.fd_table) table.push_back(Json{{"h", row.h}, {"g", row.g}, {"fd", row.fd}});
  j["fd_table"] = table;
  j["richardson"] = report.richardson;
  j["abs_error"] = report.abs_error;
  j["rel_error"] = report.rel_error;
  Json audits = Json::object();
  for (const auto& [name, a] : report.audits) audits[name] = audit_json(a);
  j["audits"] = audits;
  Json variants = Json::object();
  for (const auto& [name, values] : report.variant_results) {
    Json v = Json::object();
    for (const auto& [k, x] : values) v[k] = x;
    variants[name] = v;
  }
  j["variant_results"] = variants;
  j["version"] = version();
  j["elapsed_s"] = elapsed_s;
  return j;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verify one-sided derivatives of value functions with averaged adjoints", "aadj"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Options opt;
  auto* quad_cmd = app.add_subcommand("quad", "Quadratic value function: verify dg(0) and run audits");
  quad_cmd->add_option("--scenario", opt.scenario, "Built-in id or scenario JSON file")->required();
  quad_cmd->add_option("--out", opt.out_path, "Write the JSON report here instead of stdout");
  quad_cmd->add_option("--csv", opt.csv_path, "Write the t,g,fd table here");

  auto* shape_cmd = app.add_subcommand("shape", "Shape problem: verify dg(0) and run audits");
  shape_cmd->add_option("--scenario", opt.scenario, "square-basic or scenario JSON file")->required();
  shape_cmd->add_option("--variant", opt.variant, "Derivative formula reported as dg0_formula")
      ->check(CLI::IsMember({"corrected", "as-printed"}));
  shape_cmd->add_option("--out", opt.out_path, "Write the JSON report here instead of stdout");
  shape_cmd->add_option("--csv", opt.csv_path, "Write the t,g,fd table here");

  auto* audit_cmd = app.add_subcommand("audit", "Run a single hypothesis audit");
  audit_cmd->add_option("--scenario", opt.scenario, "Built-in id or scenario JSON file")->required();
  audit_cmd->add_option("--hypothesis", opt.hypothesis, "h3, h4, h5, identity or reduced_gradient (shape only)")
      ->required()
      ->check(CLI::IsMember({"h3", "h4", "h5", "identity", "reduced_gradient"}));
  audit_cmd->add_option("--out", opt.out_path, "Write the JSON result here instead of stdout");

  auto* list_cmd = app.add_subcommand("list-scenarios", "Print built-in scenario ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitError;
  }

  try {
    if (*quad_cmd) return run_verify(Kind::kQuad, opt, out, err);
    if (*shape_cmd) return run_verify(Kind::kShape, opt, out, err);
    if (*audit_cmd) return run_audit(opt, out);
    if (*list_cmd) {
      for (const std::string& line : list_scenarios()) out << line << '\n';
      return kExitPass;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("aadj");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace aadj::cli
