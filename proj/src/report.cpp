#include "multilasso/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace multilasso {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void dump(const nlohmann::json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<size_t>(indent) * size_t(depth + 1), ' ');
  const std::string close_pad(static_cast<size_t>(indent) * size_t(depth), ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        out += nlohmann::json(it.key()).dump();
        out += ": ";
        dump(it.value(), out, indent, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& el : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        dump(el, out, indent, depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string to_canonical_json(const nlohmann::json& j, int indent) {
  std::string out;
  dump(j, out, indent, 0);
  out += "\n";
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["value"] = r.value;
  j["formula"] = r.formula;
  j["inputs"] = nlohmann::json::object();
  for (const auto& [key, val] : r.inputs) j["inputs"][key] = val;
  return j;
}

BoundReport bound_report_from_json(const nlohmann::json& j) {
  require_fields(j, {"name", "value", "formula", "inputs"}, "BoundReport");
  BoundReport r;
  r.name = j.at("name").get<std::string>();
  r.value = j.at("value").get<double>();
  r.formula = j.at("formula").get<std::string>();
  for (auto it = j.at("inputs").begin(); it != j.at("inputs").end(); ++it)
    r.inputs[it.key()] = it.value().get<double>();
  return r;
}

nlohmann::json to_json(const MCVerdict& v) {
  nlohmann::json j;
  j["lhs"] = v.lhs;
  j["lhs_se"] = v.lhs_se;
  j["rhs"] = v.rhs;
  j["rhs_se"] = v.rhs_se;
  j["replicates"] = v.replicates;
  j["exact"] = v.exact;
  j["pass"] = v.pass;
  j["seed"] = v.seed;
  j["exceedance"] = v.exceedance;
  j["exceedance_allowed"] = v.exceedance_allowed;
  j["detail"] = v.detail;
  return j;
}

nlohmann::json to_json(const SolveResult& r) {
  nlohmann::json j;
  j["theta_hat"] = std::vector<double>(r.theta_hat.data(), r.theta_hat.data() + r.theta_hat.size());
  j["objective"] = r.objective;
  j["kkt_residual"] = r.kkt_residual;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["objective_monotone"] = r.objective_monotone;
  return j;
}

nlohmann::json to_json(const LassoTuning& t) {
  return nlohmann::json{{"lambda", t.lambda}, {"L_N", t.L_N}};
}

nlohmann::json to_json(const ConcentrationVerdict& v) {
  nlohmann::json j;
  j["EW_hat"] = v.EW_hat;
  j["EW_se"] = v.EW_se;
  j["pass"] = v.pass;
  j["replicates"] = v.replicates;
  j["seed"] = v.seed;
  auto rows = [](const std::vector<ConcentrationRow>& rs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : rs)
      a.push_back({{"s", r.s},
                   {"threshold", r.threshold},
                   {"freq", r.freq},
                   {"allowed", r.allowed},
                   {"pass", r.pass}});
    return a;
  };
  j["deviation_rows"] = rows(v.deviation_rows);
  j["bernstein_rows"] = rows(v.bernstein_rows);
  return j;
}

nlohmann::json to_json(const REEstimate& e) {
  nlohmann::json j;
  j["kappa_hat"] = e.kappa_hat;
  j["witness_v"] = std::vector<double>(e.witness_v.data(), e.witness_v.data() + e.witness_v.size());
  j["witness_J"] = e.witness_J;
  j["samples_used"] = e.samples_used;
  j["method"] = e.method;
  return j;
}

nlohmann::json to_json(const CGammaEstimate& e) {
  nlohmann::json j;
  j["value"] = e.value;
  j["pairs_evaluated"] = e.pairs_evaluated;
  j["grid_points"] = e.grid_points;
  j["grid_description"] = e.grid_description;
  return j;
}

nlohmann::json to_json(const GapEstimate& g) {
  return nlohmann::json{{"mean", g.mean}, {"se", g.se}, {"replicates", g.replicates}};
}

nlohmann::json to_json(const HiddenLipVerifyResult& r) {
  nlohmann::json j;
  j["verdict"] = to_json(r.verdict);
  j["threshold"] = r.threshold;
  j["empirical_Mq"] = r.empirical_Mq;
  j["quantile_level"] = r.quantile_level;
  j["E_SX_hat"] = r.E_SX_hat;
  j["pilot_se_max"] = r.pilot_se_max;
  j["pilot_margin"] = r.pilot_margin;
  j["exceedance_raw"] = r.exceedance_raw;
  j["pilot_inflation"] = r.pilot_inflation;
  j["inconclusive"] = r.inconclusive;
  return j;
}

void require_fields(const nlohmann::json& j, const std::vector<std::string>& allowed,
                    const std::string& context) {
  if (!j.is_object()) throw std::invalid_argument(context + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument(context + ": unknown field \"" + it.key() + "\"");
  }
}

namespace {

Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw std::invalid_argument(what + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[Eigen::Index(i)] = j[i].get<double>();
  return v;
}

}  // namespace

ModelConfig parse_model_config(const nlohmann::json& j) {
  require_fields(j, {"X", "k", "theta", "lo", "hi", "loss"}, "model config");
  ModelConfig cfg;
  const int k = j.at("k").get<int>();
  const auto& Xj = j.at("X");
  if (!Xj.is_array() || Xj.empty()) throw std::invalid_argument("model config: X must be a matrix");
  const size_t m = Xj[0].size();
  Eigen::MatrixXd X(Xj.size(), m);
  for (size_t i = 0; i < Xj.size(); ++i) {
    if (Xj[i].size() != m) throw std::invalid_argument("model config: ragged X");
    for (size_t h = 0; h < m; ++h) X(Eigen::Index(i), Eigen::Index(h)) = Xj[i][h].get<double>();
  }
  cfg.design = DesignSet(std::move(X), k);
  cfg.loss = loss_by_name(j.value("loss", std::string("multinomial_logistic")), k);
  cfg.theta = vector_from_json(j.at("theta"), "model config theta");
  cfg.domain = BoxDomain(vector_from_json(j.at("lo"), "model config lo"),
                         vector_from_json(j.at("hi"), "model config hi"));
  if (cfg.theta.size() != cfg.design.p() || cfg.domain.dim() != cfg.design.p())
    throw std::invalid_argument("model config: theta/lo/hi must have length k*m");
  return cfg;
}

HiddenModelSpec parse_hidden_spec(const nlohmann::json& j) {
  require_fields(j, {"n", "L", "sigma", "pi0", "theta", "lo", "hi"}, "hidden spec");
  const int n = j.at("n").get<int>();
  const int L = j.at("L").get<int>();
  const double sigma = j.at("sigma").get<double>();
  Eigen::VectorXd pi0;
  if (j.at("pi0").is_string() && j.at("pi0").get<std::string>() == "uniform")
    pi0 = HiddenModelSpec::uniform_pi0(n, L);
  else
    pi0 = vector_from_json(j.at("pi0"), "hidden spec pi0");
  BoxDomain domain(vector_from_json(j.at("lo"), "hidden spec lo"),
                   vector_from_json(j.at("hi"), "hidden spec hi"));
  return HiddenModelSpec(n, L, sigma, std::move(pi0),
                         vector_from_json(j.at("theta"), "hidden spec theta"),
                         std::move(domain));
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out << text;
    if (!out.good()) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed: " + path);
}

}  // namespace multilasso
