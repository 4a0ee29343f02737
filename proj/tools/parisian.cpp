// Command-line front end: evaluates Parisian-ruin quantities for refracted
// risk processes, reproduces the reference tables, runs formula-vs-Monte-
// Carlo verification, parameter sweeps and the identity audit suite.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "parisian/mc.hpp"
#include "parisian/model.hpp"
#include "parisian/ruin.hpp"
#include "parisian/run.hpp"

using json = nlohmann::json;
using namespace parisian;

namespace {

// Exit codes: 0 ok, 1 identity/verify failure, 2 validation error,
// 3 numeric error.
constexpr int kExitCheckFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
  }
}

LevyModel parse_model(const json& j) {
  if (!j.contains("type"))
    throw std::invalid_argument("model section requires a 'type'");
  const std::string type = j.at("type");
  if (type == "clexp") {
    check_keys(j, "model", {"type", "c", "eta", "alpha"});
    CramerLundbergExp m{j.at("c"), j.at("eta"), j.at("alpha")};
    validate(LevyModel{m});
    return m;
  }
  if (type == "brownian") {
    check_keys(j, "model", {"type", "c", "sigma"});
    BrownianRisk m{j.at("c"), j.at("sigma")};
    validate(LevyModel{m});
    return m;
  }
  if (type == "phasetype") {
    check_keys(j, "model", {"type", "c", "sigma", "eta", "alpha", "T"});
    JumpDiffusionPhaseType m;
    m.c = j.at("c");
    m.sigma = j.value("sigma", 0.0);
    m.eta = j.at("eta");
    const auto& av = j.at("alpha");
    m.alpha_vec = Eigen::VectorXd(av.size());
    for (size_t i = 0; i < av.size(); ++i) m.alpha_vec[i] = av[i];
    const auto& tm = j.at("T");
    m.T_mat = Eigen::MatrixXd(tm.size(), tm.size());
    for (size_t i = 0; i < tm.size(); ++i) {
      if (tm[i].size() != tm.size())
        throw std::invalid_argument("model.T must be square");
      for (size_t k = 0; k < tm.size(); ++k) m.T_mat(i, k) = tm[i][k];
    }
    validate(LevyModel{m});
    return m;
  }
  if (type == "stable32") {
    check_keys(j, "model", {"type", "c"});
    StableThreeHalves m{j.at("c")};
    validate(LevyModel{m});
    return m;
  }
  throw std::invalid_argument("unknown model type '" + type + "'");
}

std::vector<double> parse_grid(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

struct RunSpec {
  json config;
  std::string out_path;      // empty -> stdout
  std::string format = "csv";
  std::optional<std::uint64_t> seed, paths;
  std::optional<unsigned> workers;
  double corrupt = 1.0;  // verification self-test hook

  json section(const std::string& name) const {
    return config.contains(name) ? config.at(name) : json::object();
  }
  LevyModel model() const {
    if (!config.contains("model"))
      throw std::invalid_argument("config requires a 'model' section");
    return parse_model(config.at("model"));
  }
  double delta() const {
    json s = section("refraction");
    check_keys(s, "refraction", {"delta"});
    return s.value("delta", 0.0);
  }
  McConfig mc() const {
    json s = section("mc");
    check_keys(s, "mc", {"paths", "seed", "workers", "step", "horizon"});
    McConfig cfg;
    cfg.paths = s.value("paths", std::uint64_t{100000});
    cfg.seed = s.value("seed", std::uint64_t{1});
    cfg.workers = s.value("workers", 1u);
    cfg.step = s.value("step", 0.0);
    cfg.horizon = s.value("horizon", 0.0);
    if (paths) cfg.paths = *paths;
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    return cfg;
  }
};

void emit(const RunSpec& spec, const std::string& text) {
  if (spec.out_path.empty() || spec.out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(spec.out_path);
  if (!out) throw std::runtime_error("cannot open output file " + spec.out_path);
  out << text;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::closed_form: return "closed_form";
    case Method::hybrid: return "hybrid";
    default: return "quadrature";
  }
}

int cmd_eval(const RunSpec& spec) {
  json q = spec.section("query");
  check_keys(q, "query", {"op", "x", "r", "q", "a"});
  const std::string op = q.value("op", "parisian_ruin");
  const double x = q.at("x");
  const double r = q.value("r", 1.0);
  const double qq = q.value("q", 0.0);
  const double a = q.value("a", 0.0);
  RefractedModel rm{spec.model(), spec.delta()};

  RuinResult res;
  if (r == 0.0 && op == "parisian_ruin") {
    res = {classical_ruin_u(rm, x), Method::closed_form, {}};
  } else if (op == "parisian_ruin") {
    res = parisian_ruin_prob(ParisianQuery(rm, x, r, qq, a));
  } else if (op == "classical_ruin_u") {
    res = {classical_ruin_u(rm, x), Method::closed_form, {}};
  } else if (op == "classical_ruin_y") {
    res = {classical_ruin_y(rm, x), Method::closed_form, {}};
  } else if (op == "parisian_laplace") {
    res = parisian_laplace(ParisianQuery(rm, x, r, qq, a));
  } else if (op == "parisian_laplace_to_barrier") {
    res = parisian_laplace_to_barrier(ParisianQuery(rm, x, r, qq, a));
  } else if (op == "exit_up_before_parisian") {
    res = exit_up_before_parisian(ParisianQuery(rm, x, r, qq, a));
  } else {
    throw std::invalid_argument("unknown query op '" + op + "'");
  }

  json doc;
  doc["value"] = res.value;
  doc["method"] = method_name(res.method);
  doc["diagnostics"] = res.diagnostics;
  doc["params"] = {{"x", x}, {"r", r},     {"q", qq},
                   {"a", a}, {"delta", rm.delta}, {"op", op}};
  doc["params"]["model"] = spec.config.at("model");
  emit(spec, doc.dump(2) + "\n");
  return 0;
}

int cmd_table(const RunSpec& spec, int id) {
  auto cells = run::compute_table(id, spec.corrupt);
  if (spec.format == "json") {
    json rows = json::array();
    for (const auto& c : cells)
      rows.push_back({{"x", c.x},
                      {c.param_name, c.param},
                      {"value", c.computed},
                      {"reference", c.reference},
                      {"rel_dev", c.rel_dev},
                      {"note", c.note}});
    emit(spec, json{{"table", id}, {"cells", rows}}.dump(2) + "\n");
    return 0;
  }
  std::ostringstream csv;
  csv << "x," << cells.front().param_name
      << ",value,reference,rel_dev,note\n";
  for (const auto& c : cells)
    csv << run::format_sci(c.x) << ',' << run::format_sci(c.param) << ','
        << run::format_sci(c.computed) << ',' << run::format_sci(c.reference)
        << ',' << run::format_sci(c.rel_dev) << ',' << c.note << '\n';
  emit(spec, csv.str());
  return 0;
}

int cmd_verify(const RunSpec& spec) {
  json q = spec.section("query");
  check_keys(q, "query", {"x", "r", "q", "a", "op"});
  std::vector<double> xs =
      q.contains("x") ? parse_grid(q.at("x")) : std::vector<double>{1, 5, 10};
  std::vector<double> rs =
      q.contains("r") ? parse_grid(q.at("r")) : std::vector<double>{2};
  auto report = run::run_verify(spec.model(), xs, rs, spec.delta(), spec.mc(),
                                spec.corrupt);
  std::ostringstream csv;
  csv << "x,r,delta,formula,mc,se,z,truncation_note\n";
  for (const auto& row : report.rows)
    csv << run::format_sci(row.x) << ',' << run::format_sci(row.r) << ','
        << run::format_sci(row.delta) << ',' << run::format_sci(row.formula)
        << ',' << run::format_sci(row.mc) << ',' << run::format_sci(row.se)
        << ',' << run::format_sci(row.z) << ','
        << (row.truncation_note ? 1 : 0) << '\n';
  csv << (report.pass ? "PASS" : "FAIL") << '\n';
  emit(spec, csv.str());
  return report.pass ? 0 : kExitCheckFailed;
}

int cmd_sweep(const RunSpec& spec) {
  json q = spec.section("query");
  check_keys(q, "query", {"x", "r", "delta", "q", "a", "op"});
  std::vector<double> xs = q.contains("x") ? parse_grid(q.at("x"))
                                           : std::vector<double>{};
  std::vector<double> rs = q.contains("r") ? parse_grid(q.at("r"))
                                           : std::vector<double>{};
  std::vector<double> deltas = q.contains("delta")
                                   ? parse_grid(q.at("delta"))
                                   : std::vector<double>{spec.delta()};
  const double qq = q.value("q", 0.0);
  LevyModel base = spec.model();
  std::ostringstream csv;
  csv << "x,r,delta,q,value,method\n";
  for (double d : deltas)
    for (double r : rs)
      for (double x : xs) {
        RefractedModel rm{base, d};
        RuinResult res =
            r == 0.0 ? RuinResult{classical_ruin_u(rm, x), Method::closed_form, {}}
                     : parisian_ruin_prob(ParisianQuery(rm, x, r, qq));
        csv << run::format_sci(x) << ',' << run::format_sci(r) << ','
            << run::format_sci(d) << ',' << run::format_sci(qq) << ','
            << run::format_sci(res.value) << ',' << method_name(res.method)
            << '\n';
      }
  emit(spec, csv.str());
  return 0;
}

int cmd_identities(const RunSpec& spec) {
  auto results = run::run_identity_suite();
  bool all_pass = true;
  std::ostringstream csv;
  csv << "identity,residual,tolerance,pass\n";
  for (const auto& res : results) {
    all_pass = all_pass && res.pass();
    csv << res.name << ',' << run::format_sci(res.residual) << ','
        << run::format_sci(res.tolerance) << ',' << (res.pass() ? 1 : 0)
        << '\n';
  }
  csv << (all_pass ? "PASS" : "FAIL") << '\n';
  emit(spec, csv.str());
  return all_pass ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parisian ruin for refracted risk processes"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_path, format = "csv";
  std::uint64_t seed = 0, paths = 0;
  unsigned workers = 0;
  bool corrupt = false;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_path, "output path (default stdout)");
  app.add_option("--format", format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", seed, "Monte Carlo seed override");
  app.add_option("--paths", paths, "Monte Carlo path-count override");
  app.add_option("--workers", workers, "worker thread override");
  app.add_flag("--corrupt", corrupt)->group("");  // verification self-test

  auto* eval = app.add_subcommand("eval", "evaluate a single query");
  auto* table = app.add_subcommand("table", "reproduce a reference table");
  int table_id = 1;
  table->add_option("id", table_id, "table id (1-4)")->required();
  auto* verify = app.add_subcommand("verify", "compare formulas against MC");
  auto* sweep = app.add_subcommand("sweep", "evaluate a parameter grid");
  auto* identities = app.add_subcommand("identities", "run the identity suite");

  CLI11_PARSE(app, argc, argv);

  try {
    RunSpec spec;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in)
        throw std::invalid_argument("cannot read config file " + config_path);
      spec.config = json::parse(in);
      check_keys(spec.config, "config",
                 {"model", "refraction", "query", "mc", "output"});
      json outsec = spec.config.contains("output") ? spec.config.at("output")
                                                   : json::object();
      check_keys(outsec, "output", {"path", "format"});
      spec.out_path = outsec.value("path", "");
      spec.format = outsec.value("format", "csv");
    }
    if (!out_path.empty()) spec.out_path = out_path;
    if (!format.empty()) spec.format = format;
    if (seed) spec.seed = seed;
    if (paths) spec.paths = paths;
    if (workers) spec.workers = workers;
    if (corrupt) spec.corrupt = 1.05;

    if (eval->parsed()) return cmd_eval(spec);
    if (table->parsed()) return cmd_table(spec, table_id);
    if (verify->parsed()) return cmd_verify(spec);
    if (sweep->parsed()) return cmd_sweep(spec);
    if (identities->parsed()) return cmd_identities(spec);
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << json{{"error", "validation"}, {"message", e.what()}}.dump()
              << std::endl;
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << json{{"error", "validation"}, {"message", e.what()}}.dump()
              << std::endl;
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << json{{"error", "validation"}, {"message", e.what()}}.dump()
              << std::endl;
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "numeric"}, {"message", e.what()}}.dump()
              << std::endl;
    return kExitNumeric;
  }
}
