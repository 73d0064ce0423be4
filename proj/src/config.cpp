#include "rmtrack/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rmtrack/errors.hpp"
#include "rmtrack/io.hpp"

namespace rmtrack {

namespace {

void check_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw SchemaError(std::string("config: ") + field + " not finite");
}

void check_nonneg(double v, const char* field) {
  check_finite(v, field);
  if (v < 0.0) throw SchemaError(std::string("config: ") + field + " must be >= 0");
}

void check_min_int(int v, int lo, const char* field) {
  if (v < lo)
    throw SchemaError(std::string("config: ") + field + " must be >= " + std::to_string(lo));
}

void check_unit(double v, bool open_low, const char* field) {
  check_finite(v, field);
  if (v > 1.0 || v < 0.0 || (open_low && v == 0.0))
    throw SchemaError(std::string("config: ") + field + (open_low ? " must be in (0, 1]"
                                                                  : " must be in [0, 1]"));
}

double opt_number(const nlohmann::json& j, const char* key, double fallback,
                  const char* what) {
  return j.contains(key) ? number_field(j, key, what) : fallback;
}

int opt_int(const nlohmann::json& j, const char* key, int fallback, const char* what) {
  return j.contains(key) ? int_field(j, key, what) : fallback;
}

}  // namespace

void validate_config(const RunConfig& c) {
  check_nonneg(c.tracker.lambda1, "tracker.lambda1");
  check_nonneg(c.tracker.lambda2, "tracker.lambda2");
  check_nonneg(c.tracker.lambda3, "tracker.lambda3");
  check_finite(c.tracker.theta, "tracker.theta");
  check_min_int(c.tracker.k_buffer, 0, "tracker.k_buffer");
  check_nonneg(c.tracker.w_iou, "tracker.w_iou");
  check_nonneg(c.tracker.w_app, "tracker.w_app");
  check_unit(c.tracker.gate_iou, false, "tracker.gate_iou");
  check_min_int(c.tracker.max_age, 0, "tracker.max_age");
  check_min_int(c.tracker.min_hits, 1, "tracker.min_hits");
  check_min_int(c.tracker.solver_cap, 1, "tracker.solver_cap");
  check_nonneg(c.tau_assoc, "consolidate.tau_assoc");
  check_min_int(c.rider_cap, 1, "consolidate.rider_cap");
  check_min_int(c.triple_min_count, 1, "consolidate.triple_min_count");
  check_unit(c.iou_thresh, true, "evaluate.iou_thresh");
  if (c.alphas.empty()) throw SchemaError("config: evaluate.alphas must not be empty");
  for (double a : c.alphas) {
    if (!std::isfinite(a) || a <= 0.0 || a > 1.0)
      throw SchemaError("config: evaluate.alphas entries must be in (0, 1]");
  }
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("config: not an object");
  require_keys(j, {}, {"tracker", "consolidate", "evaluate"}, "config");
  RunConfig c;
  if (j.contains("tracker")) {
    const auto& t = j.at("tracker");
    require_keys(t, {},
                 {"lambda1", "lambda2", "lambda3", "theta", "k_buffer", "w_iou", "w_app",
                  "gate_iou", "max_age", "min_hits", "solver_cap"},
                 "config.tracker");
    const char* w = "config.tracker";
    c.tracker.lambda1 = opt_number(t, "lambda1", c.tracker.lambda1, w);
    c.tracker.lambda2 = opt_number(t, "lambda2", c.tracker.lambda2, w);
    c.tracker.lambda3 = opt_number(t, "lambda3", c.tracker.lambda3, w);
    c.tracker.theta = opt_number(t, "theta", c.tracker.theta, w);
    c.tracker.k_buffer = opt_int(t, "k_buffer", c.tracker.k_buffer, w);
    c.tracker.w_iou = opt_number(t, "w_iou", c.tracker.w_iou, w);
    c.tracker.w_app = opt_number(t, "w_app", c.tracker.w_app, w);
    c.tracker.gate_iou = opt_number(t, "gate_iou", c.tracker.gate_iou, w);
    c.tracker.max_age = opt_int(t, "max_age", c.tracker.max_age, w);
    c.tracker.min_hits = opt_int(t, "min_hits", c.tracker.min_hits, w);
    c.tracker.solver_cap = opt_int(t, "solver_cap", c.tracker.solver_cap, w);
  }
  if (j.contains("consolidate")) {
    const auto& s = j.at("consolidate");
    require_keys(s, {}, {"tau_assoc", "rider_cap", "triple_min_count"}, "config.consolidate");
    const char* w = "config.consolidate";
    c.tau_assoc = opt_number(s, "tau_assoc", c.tau_assoc, w);
    c.rider_cap = opt_int(s, "rider_cap", c.rider_cap, w);
    c.triple_min_count = opt_int(s, "triple_min_count", c.triple_min_count, w);
  }
  if (j.contains("evaluate")) {
    const auto& e = j.at("evaluate");
    require_keys(e, {}, {"iou_thresh", "alphas"}, "config.evaluate");
    c.iou_thresh = opt_number(e, "iou_thresh", c.iou_thresh, "config.evaluate");
    if (e.contains("alphas")) {
      const auto& a = e.at("alphas");
      if (!a.is_array()) throw SchemaError("config.evaluate: 'alphas' not an array");
      c.alphas.clear();
      for (const auto& v : a) {
        if (!v.is_number()) throw SchemaError("config.evaluate: 'alphas' entry not a number");
        c.alphas.push_back(v.get<double>());
      }
    }
  }
  validate_config(c);
  return c;
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json t;
  t["lambda1"] = c.tracker.lambda1;
  t["lambda2"] = c.tracker.lambda2;
  t["lambda3"] = c.tracker.lambda3;
  t["theta"] = c.tracker.theta;
  t["k_buffer"] = c.tracker.k_buffer;
  t["w_iou"] = c.tracker.w_iou;
  t["w_app"] = c.tracker.w_app;
  t["gate_iou"] = c.tracker.gate_iou;
  t["max_age"] = c.tracker.max_age;
  t["min_hits"] = c.tracker.min_hits;
  t["solver_cap"] = c.tracker.solver_cap;
  nlohmann::ordered_json s;
  s["tau_assoc"] = c.tau_assoc;
  s["rider_cap"] = c.rider_cap;
  s["triple_min_count"] = c.triple_min_count;
  nlohmann::ordered_json e;
  e["iou_thresh"] = c.iou_thresh;
  e["alphas"] = c.alphas;
  nlohmann::ordered_json j;
  j["tracker"] = std::move(t);
  j["consolidate"] = std::move(s);
  j["evaluate"] = std::move(e);
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("config file " + path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("config file " + path + ": " + e.what());
  }
  return config_from_json(j);
}

EvalConfig eval_config(const RunConfig& c) {
  EvalConfig e;
  e.iou_thresh = c.iou_thresh;
  e.alphas = c.alphas;
  e.triple_min_count = c.triple_min_count;
  return e;
}

}  // namespace rmtrack
