#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmtrack/config.hpp"
#include "rmtrack/errors.hpp"
#include "rmtrack/evaluate.hpp"
#include "rmtrack/io.hpp"
#include "rmtrack/simulate.hpp"
#include "rmtrack/tracker.hpp"
#include "rmtrack/violate.hpp"

namespace fs = std::filesystem;
using namespace rmtrack;

namespace {

// RMTRACK_LOG governs stderr chatter only: quiet, info (default), debug.
// Artifacts on disk are unaffected.
int verbosity() {
  const char* v = std::getenv("RMTRACK_LOG");
  if (!v) return 1;
  const std::string s(v);
  if (s == "quiet") return 0;
  if (s == "debug") return 2;
  return 1;
}

void note(int level, const std::string& msg) {
  if (verbosity() >= level) std::cerr << msg << "\n";
}

nlohmann::json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw SchemaError(std::string(what) + " " + path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string(what) + " " + path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("output file " + path + ": cannot open");
  out << text;
  if (!out) throw SchemaError("output file " + path + ": write failed");
}

Scenario resolve_scenario(const std::string& scenario_path, const std::string& preset) {
  if (scenario_path.empty() == preset.empty())
    throw SchemaError("provide exactly one of --scenario and --preset");
  if (!scenario_path.empty()) {
    const Scenario sc = scenario_from_json(read_json_file(scenario_path, "scenario file"));
    validate_scenario(sc);
    return sc;
  }
  std::string names;
  for (const Scenario& sc : preset_suite()) {
    if (sc.name == preset) return sc;
    if (!names.empty()) names += ", ";
    names += sc.name;
  }
  throw SchemaError("unknown preset '" + preset + "' (available: " + names + ")");
}

// Flag-level overrides layered over an optional config file; flags win.
struct ConfigCli {
  std::string config_path;
  std::optional<double> lambda1, lambda2, lambda3, theta, w_iou, w_app, gate_iou;
  std::optional<int> k_buffer, max_age, min_hits, solver_cap;
  std::optional<double> tau_assoc;
  std::optional<int> rider_cap, triple_min_count;
  std::optional<double> iou_thresh;
  std::optional<std::vector<double>> alphas;
};

void add_config_options(CLI::App* cmd, ConfigCli& o) {
  const RunConfig d;
  const auto dd = [](double v) { return " (default " + format_double(v) + ")"; };
  const auto di = [](int v) { return " (default " + std::to_string(v) + ")"; };
  cmd->add_option("--config", o.config_path,
                  "JSON config file; the flags below override its values");
  cmd->add_option("--lambda1", o.lambda1,
                  "rider hypothesis weight" + dd(d.tracker.lambda1));
  cmd->add_option("--lambda2", o.lambda2,
                  "motorcycle hypothesis weight" + dd(d.tracker.lambda2));
  cmd->add_option("--lambda3", o.lambda3,
                  "association weight; 0 disables coupling" + dd(d.tracker.lambda3));
  cmd->add_option("--theta", o.theta,
                  "offset subtracted from the buffered association sum" + dd(d.tracker.theta));
  cmd->add_option("--k-buffer", o.k_buffer,
                  "past frames in the association buffer" + di(d.tracker.k_buffer));
  cmd->add_option("--w-iou", o.w_iou, "motion term weight" + dd(d.tracker.w_iou));
  cmd->add_option("--w-app", o.w_app, "appearance term weight" + dd(d.tracker.w_app));
  cmd->add_option("--gate-iou", o.gate_iou,
                  "minimum predicted-box IoU for a hypothesis" + dd(d.tracker.gate_iou));
  cmd->add_option("--max-age", o.max_age,
                  "misses tolerated before a track dies" + di(d.tracker.max_age));
  cmd->add_option("--min-hits", o.min_hits,
                  "hits needed before a track is reported" + di(d.tracker.min_hits));
  cmd->add_option("--solver-cap", o.solver_cap,
                  "per-class hypothesis cap handed to the solver" + di(d.tracker.solver_cap));
  cmd->add_option("--tau-assoc", o.tau_assoc,
                  "per-frame instance-forming score threshold" + dd(d.tau_assoc));
  cmd->add_option("--rider-cap", o.rider_cap,
                  "max riders per motorcycle when forming instances" + di(d.rider_cap));
  cmd->add_option("--triple-min-count", o.triple_min_count,
                  "frames labelled triple needed to flag triple riding" + di(d.triple_min_count));
  cmd->add_option("--iou-thresh", o.iou_thresh,
                  "IoU threshold for evaluation matching" + dd(d.iou_thresh));
  cmd->add_option("--alphas", o.alphas,
                  "localization sweep thresholds (default 0.05..0.95 step 0.05)");
}

RunConfig resolve_config(const ConfigCli& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.lambda1) c.tracker.lambda1 = *o.lambda1;
  if (o.lambda2) c.tracker.lambda2 = *o.lambda2;
  if (o.lambda3) c.tracker.lambda3 = *o.lambda3;
  if (o.theta) c.tracker.theta = *o.theta;
  if (o.k_buffer) c.tracker.k_buffer = *o.k_buffer;
  if (o.w_iou) c.tracker.w_iou = *o.w_iou;
  if (o.w_app) c.tracker.w_app = *o.w_app;
  if (o.gate_iou) c.tracker.gate_iou = *o.gate_iou;
  if (o.max_age) c.tracker.max_age = *o.max_age;
  if (o.min_hits) c.tracker.min_hits = *o.min_hits;
  if (o.solver_cap) c.tracker.solver_cap = *o.solver_cap;
  if (o.tau_assoc) c.tau_assoc = *o.tau_assoc;
  if (o.rider_cap) c.rider_cap = *o.rider_cap;
  if (o.triple_min_count) c.triple_min_count = *o.triple_min_count;
  if (o.iou_thresh) c.iou_thresh = *o.iou_thresh;
  if (o.alphas) c.alphas = *o.alphas;
  validate_config(c);
  return c;
}

std::vector<TrackRow> run_selected_tracker(const std::vector<SacDetection>& dets,
                                           const RunConfig& cfg, bool baseline) {
  if (baseline) return run_independent_baseline(dets, cfg.tracker, cfg.tau_assoc, cfg.rider_cap);
  return run_tracker(dets, cfg.tracker);
}

void write_simulation(const SimOutput& sim, const fs::path& dir) {
  fs::create_directories(dir);
  write_gt_jsonl((dir / "gt.jsonl").string(), sim.gt);
  write_detections_jsonl((dir / "detections.jsonl").string(), sim.detections);
  write_tracks_csv((dir / "gt_tracks.csv").string(), gt_track_rows(sim.gt));
  note(1, "wrote gt.jsonl, detections.jsonl, gt_tracks.csv to " + dir.string());
}

void cmd_simulate(const std::string& scenario_path, const std::string& preset,
                  const std::string& out_dir) {
  const Scenario sc = resolve_scenario(scenario_path, preset);
  note(2, "generating scenario '" + sc.name + "'");
  write_simulation(generate(sc), out_dir);
}

void cmd_track(const std::string& dets_path, const std::string& out_path, const ConfigCli& o,
               bool baseline) {
  const RunConfig cfg = resolve_config(o);
  const auto dets = read_detections_jsonl(dets_path);
  note(2, "tracking " + std::to_string(dets.size()) + " detections");
  const auto rows = run_selected_tracker(dets, cfg, baseline);
  write_tracks_csv(out_path, rows);
  note(1, "wrote " + std::to_string(rows.size()) + " track rows to " + out_path);
}

void cmd_pipeline(const std::string& scenario_path, const std::string& preset,
                  const std::string& gt_path, const std::string& dets_path,
                  const std::string& out_dir, const ConfigCli& o, bool baseline) {
  const bool from_scene = !scenario_path.empty() || !preset.empty();
  const bool from_files = !gt_path.empty() || !dets_path.empty();
  if (from_scene == from_files)
    throw SchemaError(
        "pipeline: provide either a scene (--scenario or --preset) or recorded inputs "
        "(--gt and --detections)");
  if (from_files && (gt_path.empty() || dets_path.empty()))
    throw SchemaError("pipeline: --gt and --detections go together");

  const RunConfig cfg = resolve_config(o);
  const fs::path dir(out_dir);
  GroundTruthLog gt;
  std::vector<SacDetection> dets;
  if (from_scene) {
    const Scenario sc = resolve_scenario(scenario_path, preset);
    SimOutput sim = generate(sc);
    write_simulation(sim, dir);
    gt = std::move(sim.gt);
    dets = std::move(sim.detections);
  } else {
    gt = read_gt_jsonl(gt_path);
    dets = read_detections_jsonl(dets_path);
    fs::create_directories(dir);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = run_selected_tracker(dets, cfg, baseline);
  const auto t1 = std::chrono::steady_clock::now();
  note(2, "tracker produced " + std::to_string(rows.size()) + " rows in " +
              std::to_string(std::chrono::duration<double>(t1 - t0).count()) + " s");
  write_tracks_csv((dir / "tracks.csv").string(), rows);

  const auto tickets = assemble_etickets(rows, dets, cfg.triple_min_count);
  write_etickets_json((dir / "etickets.json").string(), tickets);

  const EvalReport report = evaluate_sequence(gt, rows, dets, eval_config(cfg));
  write_text_file((dir / "report.json").string(), report_to_json(report).dump(2) + "\n");
  note(1, "wrote tracks.csv, etickets.json, report.json to " + dir.string());
}

void cmd_evaluate(const std::string& gt_path, const std::string& pred_path,
                  const std::string& dets_path, const std::string& out_path,
                  const std::string& mode, const ConfigCli& o) {
  const RunConfig cfg = resolve_config(o);
  const GroundTruthLog gt = read_gt_jsonl(gt_path);
  const auto rows = read_tracks_csv(pred_path);

  EvalReport report;
  if (mode == "full") {
    if (dets_path.empty())
      throw SchemaError("evaluate: --mode full needs --detections for attribute lookups");
    report = evaluate_sequence(gt, rows, read_detections_jsonl(dets_path), eval_config(cfg));
  } else if (mode == "tracking") {
    // Tracking metrics only; violation, plate, and ticket fields stay zero.
    if (gt.frames.empty()) throw SchemaError("evaluate: ground truth holds no frames");
    const auto gt_rows = gt_track_rows(gt);
    report.counts = clear_counts(gt_rows, rows, cfg.iou_thresh);
    report.mota = mota(gt_rows, rows, cfg.iou_thresh);
    report.idf1 = idf1(gt_rows, rows, cfg.iou_thresh);
    const HotaResult h = hota(gt_rows, rows, cfg.alphas);
    report.hota = h.hota;
    report.det_a = h.det_a;
    report.ass_a = h.ass_a;
    const int first = gt.frames.front().frame;
    const int last = gt.frames.back().frame;
    report.assoc_score_pct = rm_association_metric(
        instances_from_gt(gt), instances_from_rows(rows, first, last), cfg.iou_thresh);
  } else {
    throw SchemaError("evaluate: --mode must be 'full' or 'tracking'");
  }
  write_text_file(out_path, report_to_json(report).dump(2) + "\n");
  note(1, "wrote " + out_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Rider-motorcycle tracking pipeline: synthetic scenes, joint tracking, "
      "violation tickets, and evaluation"};
  app.require_subcommand(1);

  // simulate
  std::string sim_scenario, sim_preset, sim_out;
  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic scene's artifacts");
  sim->add_option("--scenario", sim_scenario, "scenario JSON file");
  sim->add_option("--preset", sim_preset, "named preset scenario");
  sim->add_option("--out-dir", sim_out, "output directory")->required();

  // track
  std::string trk_dets, trk_out;
  bool trk_baseline = false;
  ConfigCli trk_cfg;
  CLI::App* trk = app.add_subcommand("track", "Run the tracker over a detection stream");
  trk->add_option("--detections", trk_dets, "detection JSONL file")->required();
  trk->add_option("--out", trk_out, "output tracks CSV")->required();
  trk->add_flag("--baseline", trk_baseline,
                "run the independent per-class baseline instead of the joint tracker");
  add_config_options(trk, trk_cfg);

  // pipeline
  std::string pl_scenario, pl_preset, pl_gt, pl_dets, pl_out;
  bool pl_baseline = false;
  ConfigCli pl_cfg;
  CLI::App* pl = app.add_subcommand(
      "pipeline", "Simulate (or load), track, consolidate tickets, and evaluate");
  pl->add_option("--scenario", pl_scenario, "scenario JSON file");
  pl->add_option("--preset", pl_preset, "named preset scenario");
  pl->add_option("--gt", pl_gt, "recorded ground-truth JSONL");
  pl->add_option("--detections", pl_dets, "recorded detection JSONL");
  pl->add_option("--out-dir", pl_out, "output directory")->required();
  pl->add_flag("--baseline", pl_baseline,
               "run the independent per-class baseline instead of the joint tracker");
  add_config_options(pl, pl_cfg);

  // evaluate
  std::string ev_gt, ev_pred, ev_dets, ev_out, ev_mode = "full";
  ConfigCli ev_cfg;
  CLI::App* ev = app.add_subcommand("evaluate", "Score tracks against ground truth");
  ev->add_option("--gt", ev_gt, "ground-truth JSONL")->required();
  ev->add_option("--pred", ev_pred, "predicted tracks CSV")->required();
  ev->add_option("--detections", ev_dets, "detection JSONL (needed by --mode full)");
  ev->add_option("--out", ev_out, "output report JSON")->required();
  ev->add_option("--mode", ev_mode, "full | tracking (default full)");
  add_config_options(ev, ev_cfg);

  try {
    app.parse(argc, argv);
    if (sim->parsed()) cmd_simulate(sim_scenario, sim_preset, sim_out);
    if (trk->parsed()) cmd_track(trk_dets, trk_out, trk_cfg, trk_baseline);
    if (pl->parsed())
      cmd_pipeline(pl_scenario, pl_preset, pl_gt, pl_dets, pl_out, pl_cfg, pl_baseline);
    if (ev->parsed()) cmd_evaluate(ev_gt, ev_pred, ev_dets, ev_out, ev_mode, ev_cfg);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FrameMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const CapExceededError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
