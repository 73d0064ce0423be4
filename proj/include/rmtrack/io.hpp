#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rmtrack/detection.hpp"

namespace rmtrack {

/// One output row of a tracker run: the matched detection's box plus the
/// identities the tracker maintains. assoc_id is -1 until established.
struct TrackRow {
  int frame = 0;
  int track_id = 0;
  ObjClass cls = ObjClass::rider;
  int assoc_id = -1;
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
  double conf = 0.0;

  BBox bbox() const { return BBox{x, y, w, h}; }
  bool operator==(const TrackRow&) const = default;
};

/// Shortest decimal string that round-trips the value (std::to_chars).
std::string format_double(double v);

/// Strict-schema helpers shared by every JSON reader: presence of all
/// required keys, rejection of any key outside required + optional, and
/// typed field access. All throw SchemaError naming the context.
void require_keys(const nlohmann::json& j, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional, const char* what);
double number_field(const nlohmann::json& j, const char* key, const char* what);
int int_field(const nlohmann::json& j, const char* key, const char* what);

/// Mask JSON: {"w":int,"h":int,"cell":float,"runs":[int,...]}.
nlohmann::ordered_json mask_to_json(const BinaryMask& m);
BinaryMask mask_from_json(const nlohmann::json& j);

/// Detection JSON object in documented field order; emb and attrs are
/// omitted when absent. Readers reject unknown keys.
nlohmann::ordered_json detection_to_json(const SacDetection& d);
SacDetection detection_from_json(const nlohmann::json& j);

/// JSON Lines detection stream, one detection per line, frame-ordered as
/// given. Readers throw SchemaError naming the offending line.
void write_detections_jsonl(const std::string& path,
                            const std::vector<SacDetection>& dets);
std::vector<SacDetection> read_detections_jsonl(const std::string& path);

/// Track CSV with header frame,track_id,class,assoc_id,x,y,w,h,conf.
void write_tracks_csv(const std::string& path, const std::vector<TrackRow>& rows);
std::vector<TrackRow> read_tracks_csv(const std::string& path);

}  // namespace rmtrack
