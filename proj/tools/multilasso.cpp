// multilasso: penalized estimation for multi-combination and hidden-covariate
// models, closed-form bound evaluators, and Monte Carlo verification of the
// tail guarantees. JSON config in, JSON (or CSV trace) out; identical
// config+seed reproduces the output byte for byte.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "multilasso/diagnostics.hpp"
#include "multilasso/e2e.hpp"
#include "multilasso/hidden.hpp"
#include "multilasso/mc.hpp"
#include "multilasso/model.hpp"
#include "multilasso/parallel.hpp"
#include "multilasso/report.hpp"
#include "multilasso/rng.hpp"
#include "multilasso/solver.hpp"
#include "multilasso/theory.hpp"

using nlohmann::json;
using namespace multilasso;

namespace {

constexpr const char* kArtifactVersion = "1.0.0";
constexpr const char* kSchemaVersion = "1";

// exit codes: 2 schema violation, 3 numeric failure, 4 I/O
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::string format = "json";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

struct StageClock {
  std::vector<std::pair<std::string, double>> stages;
  std::chrono::steady_clock::time_point last = std::chrono::steady_clock::now();
  void mark(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    stages.emplace_back(name, std::chrono::duration<double, std::milli>(now - last).count());
    last = now;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_config(const CommonOpts& opts, const char* command) {
  if (opts.config_path.empty()) throw SchemaError("--config is required");
  const std::string text = read_file(opts.config_path);
  json cfg;
  try {
    cfg = json::parse(text);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  if (cfg.contains("command") && cfg.at("command").get<std::string>() != command)
    throw SchemaError("config \"command\" does not match the subcommand");
  return cfg;
}

std::uint64_t pick_seed(const CommonOpts& opts, const json& cfg) {
  if (opts.seed_set) return opts.seed;
  if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
  return 0;
}

// Writes the deterministic payload to --out (or stdout) and a companion
// manifest carrying the config hash and timings alongside it.
void emit(const CommonOpts& opts, const json& payload, StageClock& clock,
          const std::string& csv_trace = "") {
  const bool csv = opts.format == "csv";
  const std::string body = csv ? csv_trace : to_canonical_json(payload);
  if (csv && csv_trace.empty()) throw SchemaError("this command has no CSV trace output");
  if (opts.out_path.empty()) {
    std::cout << body;
    return;
  }
  try {
    write_text_atomic(opts.out_path, body);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  clock.mark("write_output");

  json manifest;
  manifest["artifact_version"] = kArtifactVersion;
  manifest["schema_version"] = kSchemaVersion;
  manifest["config_hash"] =
      "fnv1a64:" + std::to_string(fnv1a64(read_file(opts.config_path)));
  manifest["results"] = payload;
  json timings = json::object();
  double total = 0.0;
  for (const auto& [name, ms] : clock.stages) {
    timings[name] = ms;
    total += ms;
  }
  manifest["stage_timings_ms"] = timings;
  manifest["wall_clock_ms"] = total;
  try {
    write_text_atomic(opts.out_path + ".manifest.json", to_canonical_json(manifest));
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
}

json base_payload(const char* command, std::uint64_t seed) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["seed"] = seed;
  return j;
}

double need_num(const json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("missing field \"") + key + "\"");
  return j.at(key).get<double>();
}

long long need_int(const json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("missing field \"") + key + "\"");
  return j.at(key).get<long long>();
}

std::string sups_csv(const std::vector<double>& sups) {
  std::string out = "replicate,sup\n";
  for (size_t i = 0; i < sups.size(); ++i)
    out += std::to_string(i) + "," + format_double(sups[i]) + "\n";
  return out;
}

// ---------------------------------------------------------------- constants
json run_constants(const json& cfg) {
  if (!cfg.contains("theorem")) throw SchemaError("missing field \"theorem\"");
  const std::string theorem = cfg.at("theorem").get<std::string>();
  // strict per-theorem schemas: a field foreign to the named formula is an error
  auto allow = [&](std::vector<std::string> fields) {
    fields.push_back("command");
    fields.push_back("seed");
    fields.push_back("theorem");
    require_fields(cfg, fields, "constants config (" + theorem + ")");
  };
  if (theorem == "beta") allow({"k"});
  else if (theorem == "local_lip_constants" || theorem == "global_lip_constants")
    allow({"F1", "F2", "M_Z", "R_D", "k"});
  else if (theorem == "local_tail_threshold" || theorem == "global_tail_threshold")
    allow({"model", "F1", "F2", "q"});
  else if (theorem == "local_lip_threshold" || theorem == "global_lip_threshold")
    allow({"model", "F1", "F2", "q", "q_prime"});
  else if (theorem == "lasso_tuning") allow({"K", "M_q", "N", "kappa", "C_gamma"});
  else if (theorem == "lasso_error_bound")
    allow({"k", "K", "L_N", "S", "N", "kappa", "sigma_XS"});
  else if (theorem == "mean_max_bound") allow({"a", "b", "c", "d"});
  else if (theorem == "massart_bound") allow({"vectors"});
  else if (theorem == "hidden_constants") allow({"F1", "F2", "A_g", "B_g", "M_X", "R_D"});
  else if (theorem == "hidden_lip_threshold")
    allow({"F1", "F2", "A_g", "B_g", "M_X", "R_D", "E_SX", "N", "p", "q0", "q1"});
  else if (theorem == "prop_hidden_error") allow({"K", "M_q", "S", "C_ell"});
  else throw SchemaError("unknown theorem name: " + theorem);
  BoundReport rep;
  if (theorem == "beta") {
    rep = report_beta(int(need_int(cfg, "k")));
  } else if (theorem == "local_lip_constants" || theorem == "global_lip_constants") {
    const bool global = theorem[0] == 'g';
    rep = global ? report_global_lip_constants(need_num(cfg, "F1"), need_num(cfg, "F2"),
                                               need_num(cfg, "M_Z"), need_num(cfg, "R_D"),
                                               int(need_int(cfg, "k")))
                 : report_local_lip_constants(need_num(cfg, "F1"), need_num(cfg, "F2"),
                                              need_num(cfg, "M_Z"), need_num(cfg, "R_D"),
                                              int(need_int(cfg, "k")));
  } else if (theorem == "local_tail_threshold" || theorem == "global_tail_threshold" ||
             theorem == "local_lip_threshold" || theorem == "global_lip_threshold") {
    if (!cfg.contains("model")) throw SchemaError("threshold evaluation needs a \"model\"");
    const ModelConfig mc = parse_model_config(cfg.at("model"));
    const bool global = theorem[0] == 'g';
    const double F1 = cfg.contains("F1") ? need_num(cfg, "F1") : mc.loss.F1;
    const double F2 = cfg.contains("F2") ? need_num(cfg, "F2") : mc.loss.F2;
    const auto consts =
        global ? global_lip_constants(F1, F2, mc.design.M_Z, mc.domain.l1_diameter(),
                                      mc.design.k)
               : local_lip_constants(F1, F2, mc.design.M_Z, mc.domain.l1_diameter(),
                                     mc.design.k);
    const auto stats = ColumnStats::from_design(mc.design);
    if (theorem.find("tail") != std::string::npos)
      rep = report_tail_threshold(stats, consts, need_num(cfg, "q"), global);
    else
      rep = report_lip_threshold(stats, consts, F1, mc.design.k, need_num(cfg, "q"),
                                 need_num(cfg, "q_prime"), global);
  } else if (theorem == "lasso_tuning") {
    rep = report_lasso_tuning(need_num(cfg, "K"), need_num(cfg, "M_q"), need_int(cfg, "N"),
                              need_num(cfg, "kappa"), need_num(cfg, "C_gamma"));
  } else if (theorem == "lasso_error_bound") {
    rep = report_lasso_error_bound(int(need_int(cfg, "k")), need_num(cfg, "K"),
                                   need_num(cfg, "L_N"), need_int(cfg, "S"),
                                   need_int(cfg, "N"), need_num(cfg, "kappa"),
                                   need_num(cfg, "sigma_XS"));
  } else if (theorem == "mean_max_bound") {
    rep = report_mean_max_bound(need_num(cfg, "a"), need_num(cfg, "b"), need_num(cfg, "c"),
                                need_num(cfg, "d"));
  } else if (theorem == "massart_bound") {
    if (!cfg.contains("vectors")) throw SchemaError("massart_bound needs \"vectors\"");
    std::vector<Eigen::VectorXd> A;
    for (const auto& row : cfg.at("vectors")) {
      Eigen::VectorXd a(row.size());
      for (size_t i = 0; i < row.size(); ++i) a[Eigen::Index(i)] = row[i].get<double>();
      A.push_back(std::move(a));
    }
    rep = report_massart_bound(A);
  } else if (theorem == "hidden_constants") {
    rep = report_hidden_constants(need_num(cfg, "F1"), need_num(cfg, "F2"),
                                  need_num(cfg, "A_g"), need_num(cfg, "B_g"),
                                  need_num(cfg, "M_X"), need_num(cfg, "R_D"));
  } else if (theorem == "hidden_lip_threshold") {
    const auto c = hidden_constants(need_num(cfg, "F1"), need_num(cfg, "F2"),
                                    need_num(cfg, "A_g"), need_num(cfg, "B_g"),
                                    need_num(cfg, "M_X"), need_num(cfg, "R_D"));
    rep = report_hidden_lip_threshold(c, need_num(cfg, "M_X"), need_num(cfg, "R_D"),
                                      need_num(cfg, "E_SX"), need_int(cfg, "N"),
                                      need_int(cfg, "p"), need_num(cfg, "q0"),
                                      need_num(cfg, "q1"));
  } else {
    rep = report_prop_hidden_error(need_num(cfg, "K"), need_num(cfg, "M_q"),
                                   need_int(cfg, "S"), need_num(cfg, "C_ell"));
  }
  return to_json(rep);
}

// -------------------------------------------------------------------- solve
json run_solve(const json& cfg, std::uint64_t seed, double lambda_flag, bool lambda_set,
               int max_iters, double tol, int restarts) {
  require_fields(cfg, {"command", "seed", "model", "Y", "lambda", "K", "M_q", "kappa",
                       "C_gamma"},
                 "solve config");
  if (!cfg.contains("model")) throw SchemaError("solve needs a \"model\"");
  const ModelConfig mc = parse_model_config(cfg.at("model"));
  std::vector<int> Y;
  if (cfg.contains("Y"))
    Y = cfg.at("Y").get<std::vector<int>>();
  else
    Y = sample_responses(mc.loss, mc.design, mc.theta, seed);
  if (int(Y.size()) != mc.design.N()) throw SchemaError("solve: Y length != design rows");

  double lambda = 0.0;
  json payload = json::object();
  if (lambda_set) {
    lambda = lambda_flag;
  } else if (cfg.contains("lambda")) {
    lambda = cfg.at("lambda").get<double>();
  } else if (cfg.contains("K")) {
    const auto t = lasso_tuning(need_num(cfg, "K"), need_num(cfg, "M_q"), mc.design.N(),
                                need_num(cfg, "kappa"), need_num(cfg, "C_gamma"));
    lambda = t.lambda;
    payload["tuning"] = to_json(t);
  }
  SolverOptions opts;
  opts.max_iters = max_iters;
  opts.tol_kkt = tol;
  Objective obj = [&](const Eigen::VectorXd& u, Eigen::VectorXd* g) {
    if (g == nullptr) return total_loss(mc.loss, mc.design, Y, u);
    return total_loss_with_gradient(mc.loss, mc.design, Y, u, *g);
  };
  const auto res = restarts > 0 ? solve_with_restarts(obj, lambda, mc.domain, opts, restarts, seed)
                                : solve(obj, lambda, mc.domain, opts);
  payload["lambda"] = lambda;
  payload["result"] = to_json(res);
  return payload;
}

// ------------------------------------------------------------------ re-diag
json run_re_diag(const json& cfg, std::uint64_t seed, int s, double K, long long budget) {
  require_fields(cfg, {"command", "seed", "X", "s", "K", "budget"}, "re-diag config");
  if (!cfg.contains("X")) throw SchemaError("re-diag needs \"X\"");
  const auto& Xj = cfg.at("X");
  Eigen::MatrixXd X(Xj.size(), Xj.empty() ? 0 : Xj[0].size());
  for (size_t i = 0; i < Xj.size(); ++i)
    for (size_t h = 0; h < Xj[i].size(); ++h)
      X(Eigen::Index(i), Eigen::Index(h)) = Xj[i][h].get<double>();
  if (s == 0) s = int(need_int(cfg, "s"));
  if (K == 0.0) K = need_num(cfg, "K");
  if (budget == 0) budget = need_int(cfg, "budget");
  return to_json(kappa_RE(X, s, K, budget, seed));
}

// -------------------------------------------------------- verify-comparison
json run_verify_comparison(const json& cfg, std::uint64_t seed) {
  require_fields(cfg, {"command", "seed", "mode", "configs", "N_max", "k_max", "points",
                       "replicates", "G", "g_scale"},
                 "verify-comparison config");
  const std::string mode = cfg.value("mode", std::string("multivariate"));
  const int configs = int(cfg.value("configs", 20));
  const int N_max = int(cfg.value("N_max", 3));
  const int k_max = int(cfg.value("k_max", 2));
  const int points = int(cfg.value("points", 8));
  const long long replicates = cfg.value("replicates", 100000LL);

  json verdicts = json::array();
  bool all_pass = true;
  for (int c = 0; c < configs; ++c) {
    CounterRng rng(seed, std::uint64_t(c), 0xC0);
    const int N = 1 + int(rng.uniform_int(std::uint64_t(N_max)));
    const int k = 1 + int(rng.uniform_int(std::uint64_t(k_max)));
    TestFunctionFamily fam;
    for (int i = 0; i < N; ++i) {
      const double M = rng.uniform(0.5, 2.0);
      fam.push_back(mode == "multivariate" || rng.uniform01() < 0.5 ? tanh_product(M, k)
                                                                    : tanh_mean(M, k));
    }
    IndexSet T;
    for (int g = 0; g < points; ++g) {
      Eigen::MatrixXd t(N, k);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < k; ++j) t(i, j) = rng.uniform(-1.0, 1.0);
      T.push_back(std::move(t));
    }
    MCVerdict v;
    if (mode == "univariate") {
      // seeded gamma grid and a mix of 0-fixing M-Lipschitz transforms
      Eigen::MatrixXd gam(points, N);
      for (int g = 0; g < points; ++g)
        for (int i = 0; i < N; ++i) gam(g, i) = rng.uniform(-2.0, 2.0);
      std::vector<std::function<double(double)>> fs;
      for (int i = 0; i < N; ++i) {
        const int kind = int(rng.uniform_int(3));
        if (kind == 0) fs.emplace_back([](double x) { return x; });
        else if (kind == 1)
          fs.emplace_back([](double x) { return std::min(std::max(x, -1.0), 1.0); });
        else fs.emplace_back([](double x) { return std::tanh(x); });
      }
      v = verify_univariate_contraction(gam, fs, 1.0, replicates,
                                        mix64(seed) + std::uint64_t(c));
    } else if (mode == "multivariate") {
      const std::string gname = cfg.value("G", std::string("identity"));
      GTransform G = GTransform::Identity;
      if (gname == "relu") G = GTransform::Relu;
      else if (gname == "exp") G = GTransform::Exp;
      else if (gname != "identity") throw SchemaError("unknown G transform: " + gname);
      v = verify_multivariate_contraction(fam, T, G, cfg.value("g_scale", 4.0), replicates,
                                          mix64(seed) + std::uint64_t(c));
    } else if (mode == "l1") {
      v = verify_l1_comparison(fam, T, replicates, mix64(seed) + std::uint64_t(c));
    } else {
      throw SchemaError("unknown comparison mode: " + mode);
    }
    all_pass = all_pass && v.pass;
    verdicts.push_back(to_json(v));
  }
  json out;
  out["verdicts"] = verdicts;
  out["all_pass"] = all_pass;
  return out;
}

// -------------------------------------------------------------- verify-tail
json run_verify_tail(const json& cfg, std::uint64_t seed, std::string* csv) {
  require_fields(cfg, {"command", "seed", "model", "which", "grid_points", "grid_seed", "q",
                       "q_prime", "replicates"},
                 "verify-tail config");
  if (!cfg.contains("model")) throw SchemaError("verify-tail needs a \"model\"");
  const ModelConfig mc = parse_model_config(cfg.at("model"));
  const std::string which = cfg.value("which", std::string("local-tail"));
  const auto grid = evaluation_grid(mc.domain, int(cfg.value("grid_points", 256)),
                                    cfg.value("grid_seed", std::uint64_t(1)));
  const double q = need_num(cfg, "q");
  const long long replicates = need_int(cfg, "replicates");
  json out;
  if (which == "local-tail") {
    const auto res = verify_local_tail(mc.loss, mc.design, mc.theta, mc.domain, grid, q,
                                       replicates, seed);
    out["verdict"] = to_json(res.verdict);
    out["mean_sup"] = res.mean_sup;
    *csv = sups_csv(res.sups);
  } else if (which == "local-lip" || which == "global-lip") {
    const double qp = need_num(cfg, "q_prime");
    const auto res = which == "local-lip"
                         ? verify_local_lip(mc.loss, mc.design, mc.theta, mc.domain, grid, q,
                                            qp, replicates, seed)
                         : verify_global_lip(mc.loss, mc.design, mc.theta, mc.domain, grid, q,
                                             qp, replicates, seed);
    out["verdict"] = to_json(res.verdict);
    out["mean_sup"] = res.mean_sup;
    out["empirical_Mq"] = res.empirical_Mq;
    out["quantile_level"] = res.quantile_level;
    *csv = sups_csv(res.sups);
  } else {
    throw SchemaError("unknown verify-tail target: " + which);
  }
  return out;
}

// ----------------------------------------------------- verify-concentration
json run_verify_concentration(const json& cfg, std::uint64_t seed, std::string* csv) {
  require_fields(cfg, {"command", "seed", "N", "grid", "mult", "s_grid", "pilot_replicates",
                       "replicates", "coeff_seed"},
                 "verify-concentration config");
  const int N = int(cfg.value("N", 8));
  const int G = int(cfg.value("grid", 8));
  BoundedProcess proc;
  proc.coeff.resize(N, G);
  CounterRng rng(cfg.value("coeff_seed", std::uint64_t(1)), 0xCE);
  for (int i = 0; i < N; ++i)
    for (int g = 0; g < G; ++g) proc.coeff(i, g) = rng.uniform(-1.0, 1.0);
  proc.mult = cfg.value("mult", std::string("rademacher")) == "uniform"
                  ? BoundedProcess::Mult::Uniform
                  : BoundedProcess::Mult::Rademacher;
  std::vector<double> s_grid = cfg.contains("s_grid")
                                   ? cfg.at("s_grid").get<std::vector<double>>()
                                   : std::vector<double>{0.5, 1.0, 2.0};
  const auto v = verify_functional_concentration(proc, s_grid,
                                                 cfg.value("pilot_replicates", 20000LL),
                                                 cfg.value("replicates", 100000LL), seed);
  *csv = sups_csv(v.W);
  return to_json(v);
}

// ------------------------------------------------------------------- hidden
json run_hidden_sample(const json& cfg, std::uint64_t seed, std::string* csv) {
  require_fields(cfg, {"command", "seed", "spec", "N"}, "hidden-sample config");
  if (!cfg.contains("spec")) throw SchemaError("hidden-sample needs a \"spec\"");
  const auto spec = parse_hidden_spec(cfg.at("spec"));
  const int N = int(need_int(cfg, "N"));
  const auto ds = sample_hidden(spec, N, seed);
  json out;
  out["omega"] = ds.omega;
  json Y = json::array();
  std::string trace = "i";
  for (int t = 0; t < spec.n; ++t) trace += ",y" + std::to_string(t);
  trace += "\n";
  for (int i = 0; i < N; ++i) {
    json row = json::array();
    trace += std::to_string(i);
    for (int t = 0; t < spec.n; ++t) {
      row.push_back(ds.Y(i, t));
      trace += "," + format_double(ds.Y(i, t));
    }
    trace += "\n";
    Y.push_back(row);
  }
  out["Y"] = Y;
  *csv = trace;
  return out;
}

json run_hidden_fit(const json& cfg, std::uint64_t seed) {
  require_fields(cfg, {"command", "seed", "spec", "N", "Y", "K", "M_q", "C_ell",
                       "C_ell_replicates"},
                 "hidden-fit config");
  if (!cfg.contains("spec")) throw SchemaError("hidden-fit needs a \"spec\"");
  const auto spec = parse_hidden_spec(cfg.at("spec"));
  Eigen::MatrixXd Y;
  int N = 0;
  if (cfg.contains("Y")) {
    const auto& Yj = cfg.at("Y");
    N = int(Yj.size());
    Y.resize(N, spec.n);
    for (int i = 0; i < N; ++i)
      for (int t = 0; t < spec.n; ++t) Y(i, t) = Yj[size_t(i)][size_t(t)].get<double>();
  } else {
    N = int(need_int(cfg, "N"));
    Y = sample_hidden(spec, N, seed).Y;
  }
  double C_ell;
  json payload = json::object();
  if (cfg.contains("C_ell")) {
    C_ell = cfg.at("C_ell").get<double>();
  } else {
    const auto est = estimate_C_ell(spec, N, cfg.value("C_ell_replicates", 4000LL),
                                    mix64(seed) + 0xCE11);
    C_ell = est.C_ell;
    payload["C_ell_estimate"] =
        json{{"lambda_min", est.lambda_min}, {"C_ell", est.C_ell}, {"replicates", est.replicates}};
  }
  const auto fit = fit_hidden_lasso(spec, Y, need_num(cfg, "K"), need_num(cfg, "M_q"), C_ell);
  payload["lambda"] = fit.lambda;
  payload["result"] = to_json(fit.result);
  payload["error_bound"] = to_json(fit.error_bound);
  return payload;
}

json run_hidden_verify(const json& cfg, std::uint64_t seed, std::string* csv) {
  require_fields(cfg, {"command", "seed", "spec", "N", "grid_points", "grid_seed", "q0", "q1",
                       "pilot_replicates", "outer_replicates"},
                 "hidden-verify config");
  if (!cfg.contains("spec")) throw SchemaError("hidden-verify needs a \"spec\"");
  const auto spec = parse_hidden_spec(cfg.at("spec"));
  const auto grid = evaluation_grid(spec.domain, int(cfg.value("grid_points", 64)),
                                    cfg.value("grid_seed", std::uint64_t(1)));
  const auto res = verify_hidden_lip(spec, int(need_int(cfg, "N")), grid, need_num(cfg, "q0"),
                                     need_num(cfg, "q1"), cfg.value("pilot_replicates", 500LL),
                                     cfg.value("outer_replicates", 2000LL), seed);
  *csv = sups_csv(res.sups);
  return to_json(res);
}

// ---------------------------------------------------------------- e2e-lasso
json run_e2e(const json& cfg, std::uint64_t seed, std::string* csv) {
  require_fields(cfg, {"command", "seed", "m", "k", "N", "S", "design", "design_seed",
                       "theta_magnitude", "box_halfwidth", "q", "K", "M_q", "Mq_pilot_replicates",
                       "Mq_grid_points", "C_gamma_grid_size", "kappa_budget", "kappa_seeds",
                       "replicates", "tol"},
                 "e2e-lasso config");
  E2EConfig e;
  e.m = int(cfg.value("m", 6));
  e.k = int(cfg.value("k", 2));
  e.N = int(cfg.value("N", 50));
  e.S = int(cfg.value("S", 1));
  e.design = cfg.value("design", std::string("gaussian"));
  e.design_seed = cfg.value("design_seed", std::uint64_t(1));
  e.theta_magnitude = cfg.value("theta_magnitude", 0.8);
  e.box_halfwidth = cfg.value("box_halfwidth", 1.0);
  e.q = cfg.value("q", 0.1);
  e.K = cfg.value("K", 3.0);
  if (cfg.contains("M_q")) e.M_q_fixed = cfg.at("M_q").get<double>();
  e.Mq_pilot_replicates = cfg.value("Mq_pilot_replicates", 2000LL);
  e.Mq_grid_points = int(cfg.value("Mq_grid_points", 256));
  e.C_gamma_grid_size = int(cfg.value("C_gamma_grid_size", 5));
  e.kappa_budget = cfg.value("kappa_budget", 20000LL);
  e.kappa_seeds = int(cfg.value("kappa_seeds", 5));
  e.replicates = cfg.value("replicates", 100LL);
  e.solver.tol_kkt = cfg.value("tol", 1e-6);
  e.seed = seed;
  const auto rep = run_e2e_lasso(e);

  json out;
  out["theta"] = std::vector<double>(rep.theta.data(), rep.theta.data() + rep.theta.size());
  out["kappa_estimates"] = rep.kappa_estimates;
  out["kappa_used"] = rep.kappa_used;
  out["sigma_XS"] = rep.sigma_XS;
  out["C_gamma"] = rep.C_gamma;
  out["M_q"] = rep.M_q;
  out["lambda"] = rep.lambda;
  out["L_N"] = rep.L_N;
  out["bound"] = rep.bound;
  out["fraction_within_bound"] = rep.fraction_within_bound;
  out["sq_errors"] = rep.sq_errors;
  out["all_monotone"] = rep.all_monotone;
  std::string trace = "replicate,sq_error,bound\n";
  for (size_t i = 0; i < rep.sq_errors.size(); ++i)
    trace += std::to_string(i) + "," + format_double(rep.sq_errors[i]) + "," +
             format_double(rep.bound) + "\n";
  *csv = trace;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"penalized multi-combination / hidden-covariate estimation and "
               "Monte Carlo verification of its tail guarantees"};
  app.require_subcommand(1);

  CommonOpts opts;
  double lambda_flag = 0.0;
  int max_iters = 10000, restarts = 0, rd_s = 0;
  double tol = 1e-7, rd_K = 0.0;
  long long rd_budget = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON config file");
    sub->add_option("--out", opts.out_path, "output path (stdout when absent)");
    sub->add_option("--format", opts.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--seed", opts.seed, "64-bit seed (overrides the config)")
        ->each([&](const std::string&) { opts.seed_set = true; });
    sub->add_option("--threads", opts.threads, "worker threads (0 = auto)");
  };

  CLI::App* c_solve = app.add_subcommand("solve", "penalized fit of a model config");
  add_common(c_solve);
  c_solve->add_option("--lambda", lambda_flag, "penalty weight");
  c_solve->add_option("--max-iters", max_iters, "iteration cap");
  c_solve->add_option("--tol", tol, "KKT residual tolerance");
  c_solve->add_option("--restarts", restarts, "extra seeded starts");

  CLI::App* c_constants = app.add_subcommand("constants", "closed-form bound evaluators");
  add_common(c_constants);

  CLI::App* c_rediag = app.add_subcommand("re-diag", "restricted-eigenvalue search");
  add_common(c_rediag);
  c_rediag->add_option("--s", rd_s, "support size");
  c_rediag->add_option("--K", rd_K, "cone opening");
  c_rediag->add_option("--budget", rd_budget, "random samples");

  CLI::App* c_comp = app.add_subcommand("verify-comparison", "sign-complexity comparisons");
  add_common(c_comp);
  CLI::App* c_tail = app.add_subcommand("verify-tail", "Lipschitz/tail Monte Carlo checks");
  add_common(c_tail);
  CLI::App* c_conc = app.add_subcommand("verify-concentration", "bounded-process tails");
  add_common(c_conc);
  CLI::App* c_hsample = app.add_subcommand("hidden-sample", "draw a hidden-model dataset");
  add_common(c_hsample);
  CLI::App* c_hfit = app.add_subcommand("hidden-fit", "penalized hidden-likelihood fit");
  add_common(c_hfit);
  CLI::App* c_hverify = app.add_subcommand("hidden-verify", "hidden Lipschitz tail check");
  add_common(c_hverify);
  CLI::App* c_e2e = app.add_subcommand("e2e-lasso", "full sample-fit-bound experiment");
  add_common(c_e2e);

  CLI11_PARSE(app, argc, argv);

  const bool lambda_set = c_solve->count("--lambda") > 0;

  try {
    if (opts.threads > 0) set_thread_count(opts.threads);
    StageClock clock;
    const std::string name = app.get_subcommands().front()->get_name();
    const json cfg = load_config(opts, name.c_str());
    clock.mark("load_config");
    const std::uint64_t seed = pick_seed(opts, cfg);

    json payload = base_payload(name.c_str(), seed);
    std::string csv_trace;
    if (name == "constants") payload["results"] = run_constants(cfg);
    else if (name == "solve")
      payload["results"] = run_solve(cfg, seed, lambda_flag, lambda_set, max_iters, tol, restarts);
    else if (name == "re-diag") payload["results"] = run_re_diag(cfg, seed, rd_s, rd_K, rd_budget);
    else if (name == "verify-comparison") payload["results"] = run_verify_comparison(cfg, seed);
    else if (name == "verify-tail") payload["results"] = run_verify_tail(cfg, seed, &csv_trace);
    else if (name == "verify-concentration")
      payload["results"] = run_verify_concentration(cfg, seed, &csv_trace);
    else if (name == "hidden-sample")
      payload["results"] = run_hidden_sample(cfg, seed, &csv_trace);
    else if (name == "hidden-fit") payload["results"] = run_hidden_fit(cfg, seed);
    else if (name == "hidden-verify")
      payload["results"] = run_hidden_verify(cfg, seed, &csv_trace);
    else if (name == "e2e-lasso") payload["results"] = run_e2e(cfg, seed, &csv_trace);
    else throw SchemaError("unknown command");
    clock.mark("compute");

    emit(opts, payload, clock, csv_trace);
    return 0;
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  }
}
