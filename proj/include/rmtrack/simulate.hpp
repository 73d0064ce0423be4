#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rmtrack/detection.hpp"
#include "rmtrack/io.hpp"

namespace rmtrack {

/// How new rider/motorcycle instances enter the scene.
struct SpawnSpec {
  double rate = 0.15;  // per-frame spawn probability while below max_active
  int initial = 2;     // instances placed inside the image at frame 0
  int max_active = 12;
  std::array<double, 3> rider_count_probs{0.6, 0.3, 0.1};  // 1, 2, 3 riders
  double helmet_prob = 0.7;  // per rider
  // Plate templates: 'D' expands to a digit, 'L' to an uppercase letter,
  // anything else is literal.
  std::vector<std::string> plate_templates{"KADDLLDDDD", "MHDDLLDDDD"};
};

struct MotionSpec {
  double speed_min = 0.8;  // px/frame along the lane
  double speed_max = 2.0;
  double curvature = 0.0;      // lateral sway amplitude, px
  double ego_drift = 0.0;      // camera-induced x shift, px/frame
  double opposite_prob = 0.0;  // chance an instance drives against the flow
};

struct OccluderSpec {
  int count = 0;
  double w = 24.0;
  double h = 48.0;
  double speed = 1.5;  // px/frame, horizontal sweep with wraparound
};

struct NoiseSpec {
  double miss_prob = 0.0;
  double occ_miss_multiplier = 0.0;  // extra miss prob per unit occlusion
  double box_jitter_sigma = 0.0;     // px, each of x/y/w/h
  double fp_rate = 0.0;              // expected false positives per frame
  int mask_erode = 0;                // max erosion rounds per mask
  int mask_dilate = 0;               // max dilation rounds per mask
  double label_flip_prob = 0.0;      // helmet and count attributes
  double plate_char_corrupt = 0.0;   // per-character rate at reference height
};

/// Full description of one synthetic scene; the seed pins every draw.
struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  int n_frames = 60;
  double image_w = 256.0;
  double image_h = 192.0;
  GridSpec grid{64, 48, 4.0};
  SpawnSpec spawn;
  MotionSpec motion;
  OccluderSpec occluders;
  NoiseSpec noise;
};

/// Throws SchemaError on out-of-range fields.
void validate_scenario(const Scenario& sc);

/// Strict JSON round trip for scenario files (unknown keys rejected).
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::ordered_json scenario_to_json(const Scenario& sc);

/// One ground-truth object in one frame. Riders carry a helmet label;
/// motorcycles carry the instance rider-count label and plate string.
struct GtObject {
  int gt_id = 0;
  ObjClass cls = ObjClass::rider;
  BBox bbox;
  int assoc_gt_id = 0;
  HelmetLabel helmet = HelmetLabel::unknown;
  CountLabel count = CountLabel::none;
  std::string plate;
  double occluded_fraction = 0.0;
};

struct GtFrame {
  int frame = 0;
  std::vector<GtObject> objects;
};

/// Per-track summary derived from the frame log.
struct GtTrack {
  int gt_id = 0;
  ObjClass cls = ObjClass::rider;
  int assoc_gt_id = 0;
  int first_frame = 0;
  int last_frame = 0;
  HelmetLabel helmet = HelmetLabel::unknown;  // riders
  bool triple = false;                        // instance-level flag
  std::string plate;                          // motorcycles
};

struct GroundTruthLog {
  std::vector<GtFrame> frames;
  std::vector<GtTrack> tracks;  // ascending gt_id
};

struct SimOutput {
  GroundTruthLog gt;
  std::vector<SacDetection> detections;  // frame-ordered, unique det_ids
};

/// Pure function of the scenario: moves instances by constant velocity plus
/// sway and ego drift, rasterizes band masks whose cross masks mirror the
/// partner masks exactly, then corrupts copies of them per the noise spec.
SimOutput generate(const Scenario& sc);

/// Named, fixed-parameter scenarios shipped for reproducible runs.
std::vector<Scenario> preset_suite();

/// GT JSONL: one frame object per line; track summaries are rebuilt on read.
void write_gt_jsonl(const std::string& path, const GroundTruthLog& gt);
GroundTruthLog read_gt_jsonl(const std::string& path);

/// GT as tracker-format rows (track_id = gt_id, conf = 1).
std::vector<TrackRow> gt_track_rows(const GroundTruthLog& gt);

}  // namespace rmtrack
