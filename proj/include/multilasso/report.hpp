#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "multilasso/diagnostics.hpp"
#include "multilasso/hidden.hpp"
#include "multilasso/mc.hpp"
#include "multilasso/model.hpp"
#include "multilasso/solver.hpp"
#include "multilasso/theory.hpp"

namespace multilasso {

// Canonical JSON text: sorted object keys (nlohmann default) and every real
// printed with 17 significant digits, enough for bit-exact re-parsing.
std::string to_canonical_json(const nlohmann::json& j, int indent = 2);
std::string format_double(double v);

// FNV-1a over the raw bytes; any byte change changes the digest.
std::uint64_t fnv1a64(const std::string& bytes);

nlohmann::json to_json(const BoundReport& r);
BoundReport bound_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MCVerdict& v);
nlohmann::json to_json(const SolveResult& r);
nlohmann::json to_json(const LassoTuning& t);
nlohmann::json to_json(const ConcentrationVerdict& v);
nlohmann::json to_json(const REEstimate& e);
nlohmann::json to_json(const CGammaEstimate& e);
nlohmann::json to_json(const GapEstimate& g);
nlohmann::json to_json(const HiddenLipVerifyResult& r);

// Throws std::invalid_argument when `j` is not an object or carries a key
// outside `allowed` (strict schemas reject unknown fields).
void require_fields(const nlohmann::json& j, const std::vector<std::string>& allowed,
                    const std::string& context);

struct ModelConfig {
  LossFamily loss;
  DesignSet design;
  BoxDomain domain;
  Eigen::VectorXd theta;
};

// {"X": [[...]], "k": int, "theta": [...], "lo": [...], "hi": [...],
//  "loss": "multinomial_logistic" (optional)}
ModelConfig parse_model_config(const nlohmann::json& j);

// {"n":, "L":, "sigma":, "pi0": [...]|"uniform", "theta": [...],
//  "lo": [...], "hi": [...]}
HiddenModelSpec parse_hidden_spec(const nlohmann::json& j);

// Atomic write: temp file in the target directory, then rename.
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace multilasso
