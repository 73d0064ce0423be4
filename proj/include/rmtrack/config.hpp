#pragma once

#include <string>

#include <json.hpp>

#include "rmtrack/evaluate.hpp"
#include "rmtrack/tracker.hpp"

namespace rmtrack {

/// Complete parameter set of one reproducible run: tracker weights and
/// lifecycle knobs, consolidation thresholds, and evaluation settings.
/// Every field has the compiled default; a config file may set any subset.
struct RunConfig {
  TrackerConfig tracker;

  // Consolidation: instance forming for the per-frame baseline and the
  // minimum triple-riding evidence per ticket.
  double tau_assoc = 0.5;
  int rider_cap = 4;
  int triple_min_count = 1;

  // Evaluation.
  double iou_thresh = 0.5;
  std::vector<double> alphas = hota_alphas();
};

/// Throws SchemaError naming the first field outside its documented range.
void validate_config(const RunConfig& c);

/// Strict JSON reader: three optional sections ("tracker", "consolidate",
/// "evaluate"), every key optional with its default, unknown keys rejected
/// at every level, result validated.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const RunConfig& c);

/// Reads and parses a config file; parse failures and schema violations
/// both throw SchemaError naming the path.
RunConfig load_config(const std::string& path);

/// The evaluation slice of a run config.
EvalConfig eval_config(const RunConfig& c);

}  // namespace rmtrack
